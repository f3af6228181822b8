#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/fft.hpp"
#include "fdsi/grid.hpp"
#include "fdsi/random.hpp"

namespace fdsi {

/// One random-phase multisine realization:
///
///   u(n) = (2/sqrt(N)) * sum_{k in excited} U_k cos(2*pi*k*n/N + phi_k)
///
/// Under the toolkit DFT the line value at an excited bin is
/// sqrt(N) * U_k * exp(j*phi_k); the equivalent Fourier coefficient
/// (half the per-cosine peak amplitude) is U_k * exp(j*phi_k) / sqrt(N).
struct MultisineRealization {
    FrequencyGrid grid;
    std::vector<double> amplitudes;  // indexed by bin, U_k; zero off the excited set
    std::vector<double> phases;      // indexed by bin, radians in [0, 2*pi)
    std::uint64_t seed = 0;
    std::vector<double> samples;     // length N, exactly periodic by construction

    /// Complex Fourier coefficient of the line at bin k (DFT value / N).
    cdouble line_coefficient(std::size_t k) const {
        const double mag = amplitudes[k] / std::sqrt(static_cast<double>(grid.n_samples));
        return std::polar(mag, phases[k]);
    }

    /// Time-domain RMS implied by the amplitude set; exact by line orthogonality.
    double design_rms() const {
        double p = 0.0;
        for (std::size_t k : grid.excited_bins) p += amplitudes[k] * amplitudes[k];
        return std::sqrt(2.0 * p / static_cast<double>(grid.n_samples));
    }
};

using AmplitudeProfile = std::map<std::size_t, double>;

/// Flat profile: every excited line gets the same weight (scaled to the RMS
/// target at synthesis).
inline AmplitudeProfile flat_profile(const FrequencyGrid& grid) {
    AmplitudeProfile profile;
    for (std::size_t k : grid.excited_bins) profile[k] = 1.0;
    return profile;
}

/// Profile matching a tabulated one-sided PSD [power/Hz]: each excited line
/// carries the target power of the band slice it stands in for, so designs on
/// different sub-grids stay Riemann-equivalent. No RMS rescaling intended;
/// pass rms_target <= 0 alongside this to keep the absolute level.
inline AmplitudeProfile profile_for_psd(const FrequencyGrid& grid,
                                        const std::function<double(double)>& psd) {
    AmplitudeProfile profile;
    const auto& bins = grid.excited_bins;
    const double f0 = grid.bin_resolution();
    for (std::size_t i = 0; i < bins.size(); ++i) {
        // slice width = distance between midpoints to neighbouring lines
        const double lo = (i == 0) ? grid.bin_frequency(bins[i]) - f0
                                   : 0.5 * (grid.bin_frequency(bins[i - 1]) + grid.bin_frequency(bins[i]));
        const double hi = (i + 1 == bins.size())
                              ? grid.bin_frequency(bins[i]) + f0
                              : 0.5 * (grid.bin_frequency(bins[i]) + grid.bin_frequency(bins[i + 1]));
        const double line_power = psd(grid.bin_frequency(bins[i])) * (hi - lo);
        profile[bins[i]] = std::sqrt(std::max(0.0, line_power) * static_cast<double>(grid.n_samples) / 2.0);
    }
    return profile;
}

namespace detail {

inline MultisineRealization synthesize_lines(const FrequencyGrid& grid,
                                             const AmplitudeProfile& profile, double rms_target,
                                             std::uint64_t seed) {
    if (grid.excited_bins.empty())
        throw Error(ErrorCategory::config, "synthesize_multisine: grid has no excited bins");
    for (const auto& [bin, amp] : profile) {
        if (!grid.is_excited(bin))
            throw Error(ErrorCategory::config,
                        "synthesize_multisine: amplitude profile touches non-excited bin " + std::to_string(bin));
        if (amp < 0.0)
            throw Error(ErrorCategory::config, "synthesize_multisine: negative amplitude");
    }

    MultisineRealization ms;
    ms.grid = grid;
    ms.seed = seed;
    const std::size_t n = grid.n_samples;
    ms.amplitudes.assign(n / 2 + 1, 0.0);
    ms.phases.assign(n / 2 + 1, 0.0);

    Rng rng(seed);
    for (std::size_t k : grid.excited_bins) {
        auto it = profile.find(k);
        ms.amplitudes[k] = (it == profile.end()) ? 0.0 : it->second;
        ms.phases[k] = rng.phase();
    }

    double power = 0.0;
    for (std::size_t k : grid.excited_bins) power += ms.amplitudes[k] * ms.amplitudes[k];
    if (power <= 0.0)
        throw Error(ErrorCategory::config, "synthesize_multisine: amplitude profile is all-zero");

    if (rms_target > 0.0) {
        const double current = std::sqrt(2.0 * power / static_cast<double>(n));
        const double scale = rms_target / current;
        for (std::size_t k : grid.excited_bins) ms.amplitudes[k] *= scale;
    }

    // Inverse DFT of the designed spectrum; line value sqrt(N) U_k e^{j phi}.
    cvector half(n / 2 + 1, cdouble(0.0, 0.0));
    const double root_n = std::sqrt(static_cast<double>(n));
    for (std::size_t k : grid.excited_bins) half[k] = std::polar(root_n * ms.amplitudes[k], ms.phases[k]);
    ms.samples = irfft(half, n);
    return ms;
}

}  // namespace detail

/// Synthesizes a random-phase multisine on the grid. Phases are drawn
/// independently uniform on [0,2*pi) from the seeded generator; amplitudes
/// follow the profile shape and are rescaled so the time-sample RMS equals
/// rms_target. Identical (grid, profile, seed) give bit-identical output.
inline MultisineRealization synthesize_multisine(const FrequencyGrid& grid,
                                                 const AmplitudeProfile& profile,
                                                 double rms_target, std::uint64_t seed) {
    if (rms_target <= 0.0)
        throw Error(ErrorCategory::config, "synthesize_multisine: rms_target must be positive");
    return detail::synthesize_lines(grid, profile, rms_target, seed);
}

/// Profile-preserving variant: the amplitudes are taken as absolute U_k
/// values with no RMS rescaling. Dropping detection lines from a design thus
/// lowers the total power here, while the rms_target variant keeps it
/// constant; both behaviours stay available.
inline MultisineRealization synthesize_multisine_profile(const FrequencyGrid& grid,
                                                         const AmplitudeProfile& profile,
                                                         std::uint64_t seed) {
    return detail::synthesize_lines(grid, profile, -1.0, seed);
}

inline MultisineRealization synthesize_multisine(const FrequencyGrid& grid, double rms_target,
                                                 std::uint64_t seed) {
    return synthesize_multisine(grid, flat_profile(grid), rms_target, seed);
}

/// All-zero excitation on the grid (for noise-only closed-loop runs).
inline MultisineRealization zero_excitation(const FrequencyGrid& grid) {
    MultisineRealization ms;
    ms.grid = grid;
    ms.amplitudes.assign(grid.n_samples / 2 + 1, 0.0);
    ms.phases.assign(grid.n_samples / 2 + 1, 0.0);
    ms.samples.assign(grid.n_samples, 0.0);
    return ms;
}

/// Per-band outcome of the Riemann-equivalence power check.
struct BandPowerDeviation {
    double f_lo = 0.0;
    double f_hi = 0.0;
    double realized_power = 0.0;
    double target_power = 0.0;
    double relative_deviation = 0.0;
    std::size_t n_lines = 0;
    bool no_lines = false;  // flagged, not failed
};

/// Compares per-band signal power against the integral of a tabulated target
/// PSD. Deviation is O(1/N) for a conforming design.
inline std::vector<BandPowerDeviation> verify_riemann_band_power(
    const MultisineRealization& ms, const std::function<double(double)>& target_psd,
    const std::vector<std::pair<double, double>>& bands) {
    std::vector<BandPowerDeviation> report;
    const double f0 = ms.grid.bin_resolution();
    for (const auto& [f_lo, f_hi] : bands) {
        if (!(f_lo < f_hi)) throw Error(ErrorCategory::usage, "verify_riemann_band_power: empty band");
        BandPowerDeviation row;
        row.f_lo = f_lo;
        row.f_hi = f_hi;
        for (std::size_t k : ms.grid.excited_bins) {
            const double f = ms.grid.bin_frequency(k);
            if (f < f_lo || f > f_hi) continue;
            row.realized_power += 2.0 * ms.amplitudes[k] * ms.amplitudes[k] / static_cast<double>(ms.grid.n_samples);
            ++row.n_lines;
        }
        // trapezoid integral of the target PSD on the f0 sub-grid
        const int steps = std::max(2, static_cast<int>(std::ceil((f_hi - f_lo) / f0)));
        const double h = (f_hi - f_lo) / steps;
        double integral = 0.5 * (target_psd(f_lo) + target_psd(f_hi));
        for (int i = 1; i < steps; ++i) integral += target_psd(f_lo + i * h);
        row.target_power = integral * h;
        if (row.n_lines == 0) {
            row.no_lines = true;
        } else if (row.target_power > 0.0) {
            row.relative_deviation = std::abs(row.realized_power - row.target_power) / row.target_power;
        }
        report.push_back(row);
    }
    return report;
}

/// A set of n_u phase-rotated copies of one multisine for simultaneous MIMO
/// experiments. Experiment e, input i carries the rotation exp(j*2*pi*e*i/n_u)
/// on every excited line, so the per-bin experiment matrix is the DFT matrix
/// (condition number 1).
struct OrthogonalMultisineSet {
    MultisineRealization base;
    std::size_t n_inputs = 0;
    std::vector<std::vector<cdouble>> rotations;          // [experiment][input]
    std::vector<std::vector<std::vector<double>>> signals;  // [experiment][input] -> samples
};

inline OrthogonalMultisineSet orthogonal_multisines(const MultisineRealization& base,
                                                    std::size_t n_inputs) {
    if (n_inputs < 1) throw Error(ErrorCategory::config, "orthogonal_multisines: n_inputs must be >= 1");
    OrthogonalMultisineSet set;
    set.base = base;
    set.n_inputs = n_inputs;
    const std::size_t n = base.grid.n_samples;
    const double root_n = std::sqrt(static_cast<double>(n));
    set.rotations.assign(n_inputs, std::vector<cdouble>(n_inputs));
    set.signals.assign(n_inputs, std::vector<std::vector<double>>(n_inputs));
    for (std::size_t e = 0; e < n_inputs; ++e) {
        for (std::size_t i = 0; i < n_inputs; ++i) {
            const double theta = 2.0 * kPi * static_cast<double>(e * i) / static_cast<double>(n_inputs);
            set.rotations[e][i] = std::polar(1.0, theta);
            cvector half(n / 2 + 1, cdouble(0.0, 0.0));
            for (std::size_t k : base.grid.excited_bins)
                half[k] = std::polar(root_n * base.amplitudes[k], base.phases[k] + theta);
            set.signals[e][i] = irfft(half, n);
        }
    }
    return set;
}

}  // namespace fdsi
