#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fdsi/closedloop.hpp"
#include "fdsi/config.hpp"
#include "fdsi/io.hpp"
#include "fdsi/ratfit.hpp"
#include "fdsi/record.hpp"
#include "fdsi/spectral.hpp"

namespace fdsi {

inline constexpr const char* kToolVersion = "0.1.0";

/// Closed-loop analysis artifacts of one level. The feedback correction is a
/// per-realization operation (pooling random-phase realizations would cancel
/// the excited lines); the stored correction holds realization 0 and
/// corrected_power_db aggregates |Y_corr|^2 over realizations per bin.
struct ClosedLoopOutputs {
    CorrectionResult correction;  // realization 0
    std::vector<double> corrected_power_db;  // per detection bin of `correction.bins`
    IndirectEstimate indirect;
};

/// Everything produced for one excitation level.
struct LevelResult {
    double rms = 0.0;
    Record record;
    DistortionReport distortion;
    FrfEstimate frf;
    std::optional<FitResult> fit;
    std::optional<ClosedLoopOutputs> closed_loop;
};

struct ResultBundle {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<LevelResult> levels;
    FrequencyGrid grid;
};

/// design -> simulate -> analyze (-> fit -> closed-loop) for every RMS level
/// in the config; fully deterministic for a fixed (config, seed).
inline ResultBundle run_pipeline(const ExperimentConfig& cfg, std::uint64_t cfg_hash = 0) {
    ResultBundle bundle;
    bundle.config_hash = cfg_hash;
    bundle.seed = cfg.seed;

    const auto grid = build_grid(cfg.sample_rate, cfg.n_samples, cfg.f_min, cfg.f_max, cfg.grid_kind,
                                 cfg.seed, cfg.grid_options);
    bundle.grid = grid;
    const SteadyStateOptions sim_options{.periods_discard = cfg.periods_discard,
                                         .periods_keep = cfg.periods_keep,
                                         .realizations = cfg.realizations,
                                         .n_threads = cfg.threads};

    for (std::size_t level = 0; level < cfg.rms_levels.size(); ++level) {
        const std::string stage_tag = "level " + std::to_string(level);
        LevelResult result;
        result.rms = cfg.rms_levels[level];
        const std::uint64_t level_seed = derive_seed(cfg.seed, 0x10000 + level);
        try {
            const auto excitation = synthesize_multisine(grid, result.rms, level_seed);
            if (cfg.closed_loop()) {
                ClosedLoopScenario scenario{cfg.plant, *cfg.controller, cfg.reference_gain};
                result.record = steady_state_record(scenario, excitation, sim_options, cfg.noise, level_seed);
            } else {
                result.record = steady_state_record(cfg.plant, excitation, sim_options, cfg.noise, level_seed);
            }
            result.record.config_hash = cfg_hash;
        } catch (const Error& e) {
            throw Error(e.category(), "pipeline stage simulate, " + stage_tag + ": " + e.what());
        }
        try {
            const auto set = period_dfts(result.record);
            const auto stats = per_realization_line_statistics(set);
            result.distortion = classify_distortions(stats, grid);
            result.frf = robust_method(result.record);
            if (cfg.closed_loop()) {
                ClosedLoopOutputs outputs;
                outputs.correction = correct_feedback(stats[0], grid);
                std::vector<double> power(outputs.correction.bins.size(), 0.0);
                for (const auto& s : stats) {
                    const auto corr = correct_feedback(s, grid);
                    for (std::size_t i = 0; i < corr.bins.size(); ++i)
                        power[i] += std::norm(corr.y_corrected[i]) / static_cast<double>(stats.size());
                }
                for (double p : power) outputs.corrected_power_db.push_back(power_db(p));
                if (result.record.n_realizations >= 2) outputs.indirect = indirect_frf(set);
                result.closed_loop = std::move(outputs);
            }
        } catch (const Error& e) {
            throw Error(e.category(), "pipeline stage analyze, " + stage_tag + ": " + e.what());
        }
        if (cfg.fit_orders) {
            try {
                result.fit = fit_frf(result.frf, cfg.n_samples, cfg.fit_orders->first,
                                     cfg.fit_orders->second);
            } catch (const Error& e) {
                throw Error(e.category(), "pipeline stage fit, " + stage_tag + ": " + e.what());
            }
        }
        bundle.levels.push_back(std::move(result));
    }
    return bundle;
}

// --- result serialization (lossless doubles via nlohmann round-trip dump) ---

namespace detail {

inline json complex_list(const std::vector<cdouble>& values) {
    json re = json::array(), im = json::array();
    for (const auto& v : values) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

}  // namespace detail

inline json to_json(const DistortionReport& report, const FrequencyGrid& grid) {
    json classes = json::array();
    for (auto c : report.bin_class) classes.push_back(bin_class_name(c));
    json freq = json::array();
    for (std::size_t k = 0; k < report.level_db.size(); ++k) freq.push_back(grid.bin_frequency(k));
    return json{{"frequency_hz", std::move(freq)},
                {"class", std::move(classes)},
                {"level_db", report.level_db},
                {"noise_floor_db", report.noise_floor_db},
                {"has_noise_floor", report.has_noise_floor},
                {"excited_level_db", report.excited_level_db},
                {"odd_detection_level_db", report.odd_detection_level_db},
                {"even_detection_level_db", report.even_detection_level_db},
                {"noise_level_db", report.noise_level_db}};
}

inline json to_json(const FrfEstimate& est, const FrequencyGrid& grid) {
    json freq = json::array();
    for (std::size_t k : est.bins) freq.push_back(grid.bin_frequency(k));
    json out{{"bins", est.bins},
             {"frequency_hz", std::move(freq)},
             {"g", detail::complex_list(est.g)},
             {"n_realizations", est.n_realizations},
             {"n_periods", est.n_periods},
             {"flagged_bins", est.flagged_bins}};
    if (est.has_var_noise) out["var_noise"] = est.var_noise;
    if (est.has_var_total) out["var_total"] = est.var_total;
    return out;
}

inline json to_json(const FitResult& fit) {
    return json{{"numerator", fit.model.numerator},
                {"denominator", fit.model.denominator},
                {"final_cost", fit.final_cost},
                {"iterations", fit.iterations},
                {"bins", fit.bins},
                {"weighted_residuals", fit.weighted_residuals},
                {"linear_theory_covariance", fit.linear_theory_covariance},
                {"covariance_valid_under_nonlinear_distortions",
                 fit.covariance_valid_under_nonlinear_distortions},
                {"covariance_note", fit.covariance_note}};
}

inline json to_json(const ClosedLoopOutputs& outputs, const FrequencyGrid& grid) {
    json corr{{"bins", outputs.correction.bins},
              {"y_corrected", detail::complex_list(outputs.correction.y_corrected)},
              {"g_interpolated", detail::complex_list(outputs.correction.g_interpolated)},
              {"corrected_power_db", outputs.corrected_power_db},
              {"uncorrected_bins", outputs.correction.uncorrected_bins}};
    if (std::isfinite(outputs.correction.excited_snr_db))
        corr["excited_snr_db"] = outputs.correction.excited_snr_db;
    json indirect;
    if (outputs.indirect.n_realizations >= 2) {
        // per-bin mean |Y_S|^2 across realizations summarizes the residuals
        const std::size_t bins = outputs.indirect.y_s.empty() ? 0 : outputs.indirect.y_s[0].size();
        std::vector<double> y_s_power(bins, 0.0), u_s_power(bins, 0.0);
        for (const auto& spec : outputs.indirect.y_s)
            for (std::size_t k = 0; k < bins; ++k)
                y_s_power[k] += std::norm(spec[k]) / outputs.indirect.y_s.size();
        for (const auto& spec : outputs.indirect.u_s_tilde)
            for (std::size_t k = 0; k < bins; ++k)
                u_s_power[k] += std::norm(spec[k]) / outputs.indirect.u_s_tilde.size();
        indirect = json{{"bins", outputs.indirect.bins},
                        {"g_bla", detail::complex_list(outputs.indirect.g_bla)},
                        {"g_ur", detail::complex_list(outputs.indirect.g_ur)},
                        {"g_yr", detail::complex_list(outputs.indirect.g_yr)},
                        {"flagged_bins", outputs.indirect.flagged_bins},
                        {"y_s_power", std::move(y_s_power)},
                        {"u_s_tilde_power", std::move(u_s_power)}};
    }
    json out{{"correction", std::move(corr)}};
    if (!indirect.is_null()) out["indirect"] = std::move(indirect);
    (void)grid;
    return out;
}

inline json to_json(const ResultBundle& bundle) {
    json levels = json::array();
    for (const auto& level : bundle.levels) {
        json entry{{"rms", level.rms},
                   {"distortion", to_json(level.distortion, bundle.grid)},
                   {"frf", to_json(level.frf, bundle.grid)}};
        if (level.fit) entry["fit"] = to_json(*level.fit);
        if (level.closed_loop) entry["closedloop"] = to_json(*level.closed_loop, bundle.grid);
        levels.push_back(std::move(entry));
    }
    return json{{"tool_version", bundle.tool_version},
                {"config_hash", bundle.config_hash},
                {"seed", bundle.seed},
                {"levels", std::move(levels)}};
}

/// Writes the bundle payload (JSON artifacts + records) into a directory.
/// Identical configs yield byte-identical payloads; no timestamps are stored.
inline void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir,
                         bool include_records = true) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "bundle.json", std::ios::binary);
        if (!out) throw Error(ErrorCategory::io, "cannot write bundle.json");
        out << to_json(bundle).dump(2) << "\n";
    }
    if (include_records)
        for (std::size_t i = 0; i < bundle.levels.size(); ++i)
            write_record(bundle.levels[i].record, dir / ("record_level" + std::to_string(i) + ".fdsirec"));
}

}  // namespace fdsi
