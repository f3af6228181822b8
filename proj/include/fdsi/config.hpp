#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/grid.hpp"
#include "fdsi/plant.hpp"
#include "fdsi/record.hpp"

namespace fdsi {

using json = nlohmann::json;

/// Declarative description of a complete experiment: grid, excitation levels,
/// plant, noise, optional loop, averaging counts, and the analysis options.
struct ExperimentConfig {
    double sample_rate = 0.0;
    std::size_t n_samples = 0;
    double f_min = 0.0, f_max = 0.0;
    GridKind grid_kind = GridKind::odd;
    GridOptions grid_options;
    std::vector<double> rms_levels;
    Plant plant;
    NoiseSpec noise;
    std::optional<LtiFilter> controller;  // presence switches to closed loop
    double reference_gain = 1.0;
    std::size_t periods_discard = 1;
    std::size_t periods_keep = 2;
    std::size_t realizations = 1;
    std::uint64_t seed = 0;
    std::optional<std::pair<std::size_t, std::size_t>> fit_orders;  // (n_num, n_den)
    std::size_t threads = 1;

    bool closed_loop() const { return controller.has_value(); }
};

namespace detail {

inline LtiFilter filter_from_json(const json& j) {
    std::vector<double> num = j.at("num").get<std::vector<double>>();
    std::vector<double> den = j.value("den", std::vector<double>{1.0});
    return LtiFilter(std::move(num), std::move(den), j.value("gain", 1.0));
}

inline json filter_to_json(const LtiFilter& f) {
    return json{{"num", f.numerator()}, {"den", f.denominator()}};
}

inline Plant plant_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "lti") return filter_from_json(j);
    if (type == "polynomial") return StaticPolynomial{j.at("coefficients").get<std::vector<double>>()};
    if (type == "wiener_hammerstein")
        return WienerHammerstein{filter_from_json(j.at("front")),
                                 StaticPolynomial{j.at("nonlinearity").get<std::vector<double>>()},
                                 filter_from_json(j.at("back"))};
    if (type == "duffing") {
        DuffingParams p;
        p.mass = j.at("mass").get<double>();
        p.damping = j.at("damping").get<double>();
        p.k_linear = j.at("k_linear").get<double>();
        p.k_cubic = j.value("k_cubic", 0.0);
        p.oversample_factor = j.value("oversample_factor", std::size_t{8});
        p.divergence_bound = j.value("divergence_bound", 1e9);
        p.validate();
        return DuffingPlant{p};
    }
    throw Error(ErrorCategory::config, "unknown plant type '" + type + "'");
}

inline GridKind grid_kind_from_string(const std::string& s) {
    if (s == "full") return GridKind::full;
    if (s == "odd") return GridKind::odd;
    if (s == "odd_sparse") return GridKind::odd_sparse;
    if (s == "zippered") return GridKind::zippered;
    throw Error(ErrorCategory::config, "unknown grid kind '" + s + "'");
}

}  // namespace detail

/// Parses a config from JSON text (comments allowed, whitespace free-form).
/// Every field is validated before any computation starts.
inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::config, std::string("config parse error: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        const auto& grid = j.at("grid");
        cfg.sample_rate = grid.at("sample_rate").get<double>();
        cfg.n_samples = grid.at("n_samples").get<std::size_t>();
        cfg.f_min = grid.at("f_min").get<double>();
        cfg.f_max = grid.at("f_max").get<double>();
        cfg.grid_kind = detail::grid_kind_from_string(grid.value("kind", std::string("odd")));
        cfg.grid_options.group_size = grid.value("group_size", std::size_t{5});
        cfg.grid_options.drops_per_group = grid.value("drops_per_group", std::size_t{1});
        cfg.grid_options.channel_index = grid.value("channel_index", std::size_t{0});
        cfg.grid_options.n_channels = grid.value("n_channels", std::size_t{1});

        const auto& exc = j.at("excitation");
        cfg.rms_levels = exc.at("rms_levels").get<std::vector<double>>();
        if (cfg.rms_levels.empty())
            throw Error(ErrorCategory::config, "excitation.rms_levels must not be empty");
        for (double level : cfg.rms_levels)
            if (level <= 0.0) throw Error(ErrorCategory::config, "rms levels must be positive");

        cfg.plant = detail::plant_from_json(j.at("plant"));

        if (j.contains("noise")) {
            const auto& noise = j.at("noise");
            cfg.noise.std_dev = noise.value("std_dev", 0.0);
            cfg.noise.seed = noise.value("seed", std::uint64_t{0});
            cfg.noise.periodic = noise.value("periodic", false);
            if (noise.contains("shaping")) cfg.noise.shaping = detail::filter_from_json(noise.at("shaping"));
            cfg.noise.validate();
        }
        if (j.contains("loop")) {
            cfg.controller = detail::filter_from_json(j.at("loop").at("controller"));
            cfg.reference_gain = j.at("loop").value("reference_gain", 1.0);
        }

        const auto& periods = j.at("periods");
        cfg.periods_discard = periods.value("discard", std::size_t{1});
        cfg.periods_keep = periods.at("keep").get<std::size_t>();
        if (cfg.periods_keep < 1) throw Error(ErrorCategory::config, "periods.keep must be >= 1");
        cfg.realizations = j.at("realizations").get<std::size_t>();
        if (cfg.realizations < 1) throw Error(ErrorCategory::config, "realizations must be >= 1");
        cfg.seed = j.value("seed", std::uint64_t{0});

        if (j.contains("analysis") && j.at("analysis").contains("fit")) {
            const auto& fit = j.at("analysis").at("fit");
            cfg.fit_orders = {fit.at("n_num").get<std::size_t>(), fit.at("n_den").get<std::size_t>()};
        }
        // fail fast on an inconsistent grid before any simulation runs
        build_grid(cfg.sample_rate, cfg.n_samples, cfg.f_min, cfg.f_max, cfg.grid_kind, cfg.seed,
                   cfg.grid_options);
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::config, std::string("config field error: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// FNV-1a over the canonical (sorted-key, whitespace- and comment-free) dump:
/// the hash changes iff a semantically meaningful field changes.
inline std::uint64_t config_hash(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::config, std::string("config parse error: ") + e.what());
    }
    const std::string canonical = j.dump();
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

inline std::uint64_t config_hash_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_hash(ss.str());
}

}  // namespace fdsi
