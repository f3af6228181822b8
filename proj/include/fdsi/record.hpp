#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/grid.hpp"
#include "fdsi/multisine.hpp"
#include "fdsi/plant.hpp"

namespace fdsi {

/// Measured or simulated multi-channel periodic data over M realizations of
/// P periods of N samples. Channel data is stored realization-major, then
/// period, then sample.
struct Record {
    double sample_rate = 0.0;
    std::size_t n_samples_per_period = 0;  // N
    std::size_t n_periods = 0;             // P
    std::size_t n_realizations = 0;        // M
    FrequencyGrid grid;
    std::map<std::string, std::vector<double>> channels;  // "u", "y", optional "r", ...
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    std::size_t samples_per_channel() const { return n_realizations * n_periods * n_samples_per_period; }

    bool has_channel(const std::string& name) const { return channels.count(name) != 0; }

    std::span<const double> period(const std::string& channel, std::size_t realization,
                                   std::size_t period_index) const {
        const auto it = channels.find(channel);
        if (it == channels.end())
            throw Error(ErrorCategory::usage, "Record: no channel named '" + channel + "'");
        const std::size_t offset =
            (realization * n_periods + period_index) * n_samples_per_period;
        return std::span<const double>(it->second).subspan(offset, n_samples_per_period);
    }

    void validate() const {
        if (n_samples_per_period == 0 || n_periods == 0 || n_realizations == 0)
            throw Error(ErrorCategory::config, "Record: empty shape");
        if (grid.n_samples != n_samples_per_period || grid.sample_rate != sample_rate)
            throw Error(ErrorCategory::config, "Record: grid does not match the record shape");
        for (const auto& [name, data] : channels)
            if (data.size() != samples_per_channel())
                throw Error(ErrorCategory::config,
                            "Record: channel '" + name + "' length mismatch (expected M*P*N)");
    }
};

struct SteadyStateOptions {
    std::size_t periods_discard = 1;
    std::size_t periods_keep = 2;
    std::size_t realizations = 1;
    std::size_t n_threads = 1;
};

namespace detail {

inline std::vector<double> tile(const std::vector<double>& period, std::size_t count) {
    std::vector<double> out(period.size() * count);
    for (std::size_t p = 0; p < count; ++p)
        std::copy(period.begin(), period.end(), out.begin() + p * period.size());
    return out;
}

/// Runs fn(m) for m in [0, count) across up to n_threads workers. Each
/// realization owns its derived-seed stream and writes its own output slice,
/// so the result is independent of scheduling; the first error in realization
/// order is rethrown.
template <typename Fn>
void parallel_realizations(std::size_t count, std::size_t n_threads, Fn&& fn) {
    n_threads = std::max<std::size_t>(1, std::min(n_threads, count));
    if (n_threads == 1) {
        for (std::size_t m = 0; m < count; ++m) fn(m);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t)
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t m = next.fetch_add(1);
                if (m >= count) return;
                try {
                    fn(m);
                } catch (...) {
                    errors[m] = std::current_exception();
                }
            }
        });
    for (auto& w : workers) w.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Simulates M realizations of the steady-state response to re-synthesized
/// random-phase multisines and stores the kept periods.
///
/// Realization m re-synthesizes the excitation with derive_seed(seed, m) and
/// adds output noise from derive_seed(noise.seed, m), so identical (seed,
/// config) runs are bit-identical and realizations are independent streams.
inline Record steady_state_record(const Plant& plant, const MultisineRealization& excitation,
                                  const SteadyStateOptions& options, const NoiseSpec& noise,
                                  std::uint64_t seed) {
    if (options.periods_keep < 1)
        throw Error(ErrorCategory::config, "steady_state_record: periods_keep must be >= 1");
    noise.validate();
    const std::size_t n = excitation.grid.n_samples;
    const std::size_t p_total = options.periods_discard + options.periods_keep;
    const std::size_t keep_len = options.periods_keep * n;

    AmplitudeProfile profile;
    for (std::size_t k : excitation.grid.excited_bins)
        if (excitation.amplitudes[k] > 0.0) profile[k] = excitation.amplitudes[k];

    Record record;
    record.sample_rate = excitation.grid.sample_rate;
    record.n_samples_per_period = n;
    record.n_periods = options.periods_keep;
    record.n_realizations = options.realizations;
    record.grid = excitation.grid;
    record.seed = seed;
    auto& u_chan = record.channels["u"];
    auto& y_chan = record.channels["y"];
    u_chan.resize(options.realizations * keep_len);
    y_chan.resize(options.realizations * keep_len);

    detail::parallel_realizations(options.realizations, options.n_threads, [&](std::size_t m) {
        try {
            const auto ms = synthesize_multisine_profile(excitation.grid, profile, derive_seed(seed, m));
            const auto u_full = detail::tile(ms.samples, p_total);
            auto y_full = simulate_plant(plant, u_full, record.sample_rate, false);
            if (noise.enabled()) {
                const auto v = noise.generate(derive_seed(noise.seed, m), n, options.periods_keep);
                for (std::size_t i = 0; i < keep_len; ++i)
                    y_full[options.periods_discard * n + i] += v[i];
            }
            std::copy(u_full.begin() + options.periods_discard * n, u_full.end(),
                      u_chan.begin() + m * keep_len);
            std::copy(y_full.begin() + options.periods_discard * n, y_full.end(),
                      y_chan.begin() + m * keep_len);
        } catch (const Error& e) {
            throw Error(e.category(), "steady_state_record: realization " + std::to_string(m) +
                                          ": " + e.what());
        }
    });
    record.validate();
    return record;
}

/// Closed-loop counterpart: the reference r is the re-synthesized multisine,
/// the loop runs over discard+keep periods, and u, y, r are stored.
inline Record steady_state_record(const ClosedLoopScenario& scenario,
                                  const MultisineRealization& reference,
                                  const SteadyStateOptions& options, const NoiseSpec& noise,
                                  std::uint64_t seed) {
    if (options.periods_keep < 1)
        throw Error(ErrorCategory::config, "steady_state_record: periods_keep must be >= 1");
    scenario.validate();
    noise.validate();
    const std::size_t n = reference.grid.n_samples;
    const std::size_t p_total = options.periods_discard + options.periods_keep;
    const std::size_t keep_len = options.periods_keep * n;

    AmplitudeProfile profile;
    for (std::size_t k : reference.grid.excited_bins)
        if (reference.amplitudes[k] > 0.0) profile[k] = reference.amplitudes[k];
    const bool have_reference = !profile.empty();

    Record record;
    record.sample_rate = reference.grid.sample_rate;
    record.n_samples_per_period = n;
    record.n_periods = options.periods_keep;
    record.n_realizations = options.realizations;
    record.grid = reference.grid;
    record.seed = seed;
    auto& u_chan = record.channels["u"];
    auto& y_chan = record.channels["y"];
    auto& r_chan = record.channels["r"];
    u_chan.resize(options.realizations * keep_len);
    y_chan.resize(options.realizations * keep_len);
    r_chan.resize(options.realizations * keep_len);

    detail::parallel_realizations(options.realizations, options.n_threads, [&](std::size_t m) {
        try {
            std::vector<double> r_full(p_total * n, 0.0);
            if (have_reference) {
                const auto ms = synthesize_multisine_profile(reference.grid, profile, derive_seed(seed, m));
                r_full = detail::tile(ms.samples, p_total);
            }
            std::vector<double> v;
            if (noise.enabled())
                v = noise.generate(derive_seed(noise.seed, m), n, p_total);
            const auto sim = simulate_closed_loop(scenario, r_full, v, record.sample_rate);
            std::copy(sim.u.begin() + options.periods_discard * n, sim.u.end(),
                      u_chan.begin() + m * keep_len);
            std::copy(sim.y.begin() + options.periods_discard * n, sim.y.end(),
                      y_chan.begin() + m * keep_len);
            std::copy(r_full.begin() + options.periods_discard * n, r_full.end(),
                      r_chan.begin() + m * keep_len);
        } catch (const Error& e) {
            throw Error(e.category(), "steady_state_record: realization " + std::to_string(m) +
                                          ": " + e.what());
        }
    });
    record.validate();
    return record;
}

}  // namespace fdsi
