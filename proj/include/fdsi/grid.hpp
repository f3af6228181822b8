#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/random.hpp"

namespace fdsi {

enum class GridKind { full, odd, odd_sparse, zippered };

inline const char* grid_kind_name(GridKind kind) {
    switch (kind) {
        case GridKind::full: return "full";
        case GridKind::odd: return "odd";
        case GridKind::odd_sparse: return "odd_sparse";
        case GridKind::zippered: return "zippered";
    }
    return "unknown";
}

/// Excited/unexcited bin layout of a periodic experiment.
///
/// Bin k corresponds to frequency k * sample_rate / n_samples. For odd grids
/// the in-band even bins act as implicit even-detection lines; the explicit
/// detection_bins set holds the odd lines dropped by the odd_sparse scheme.
struct FrequencyGrid {
    std::size_t n_samples = 0;       // N, samples per period
    double sample_rate = 0.0;        // f_s [Hz]
    std::vector<std::size_t> excited_bins;    // sorted, in [1, N/2-1]
    std::vector<std::size_t> detection_bins;  // sorted, disjoint from excited
    GridKind kind = GridKind::full;
    std::size_t group_size = 0;       // odd_sparse
    std::size_t drops_per_group = 0;  // odd_sparse
    std::size_t channel_index = 0;    // zippered
    std::size_t n_channels = 1;       // zippered
    std::size_t band_min_bin = 0;     // requested band after rounding to the grid
    std::size_t band_max_bin = 0;
    std::uint64_t seed = 0;

    double bin_resolution() const { return sample_rate / static_cast<double>(n_samples); }
    double bin_frequency(std::size_t k) const { return static_cast<double>(k) * bin_resolution(); }
    std::size_t n_bins() const { return n_samples / 2 + 1; }

    bool is_excited(std::size_t k) const {
        return std::binary_search(excited_bins.begin(), excited_bins.end(), k);
    }
    bool is_detection(std::size_t k) const {
        return std::binary_search(detection_bins.begin(), detection_bins.end(), k);
    }
    bool in_band(std::size_t k) const { return k >= band_min_bin && k <= band_max_bin; }

    /// In-band even bins, the implicit even-nonlinearity detection lines of an
    /// odd excitation. Empty for full grids (every in-band bin is excited).
    std::vector<std::size_t> even_detection_bins() const {
        std::vector<std::size_t> out;
        if (kind == GridKind::full) return out;
        for (std::size_t k = band_min_bin; k <= band_max_bin; ++k)
            if (k % 2 == 0 && !is_excited(k)) out.push_back(k);
        return out;
    }
};

struct GridOptions {
    std::size_t group_size = 5;
    std::size_t drops_per_group = 1;
    std::size_t channel_index = 0;
    std::size_t n_channels = 1;
};

/// Builds the excited/detection bin layout for a band [f_min, f_max].
///
/// odd_sparse removes drops_per_group seeded-random odd lines from each
/// complete group of group_size consecutive in-band odd bins and records them
/// as detection lines. zippered splits the in-band odd bins round-robin over
/// n_channels so simultaneous multi-input experiments use disjoint grids.
inline FrequencyGrid build_grid(double sample_rate, std::size_t n_samples, double f_min,
                                double f_max, GridKind kind, std::uint64_t seed,
                                const GridOptions& options = {}) {
    if (sample_rate <= 0.0) throw Error(ErrorCategory::config, "build_grid: sample_rate must be positive");
    if (n_samples < 4 || n_samples % 2 != 0)
        throw Error(ErrorCategory::config, "build_grid: n_samples must be even and >= 4");
    if (!(0.0 < f_min && f_min < f_max))
        throw Error(ErrorCategory::config, "build_grid: need 0 < f_min < f_max");
    if (f_max >= sample_rate / 2.0)
        throw Error(ErrorCategory::config, "build_grid: f_max must be below the Nyquist frequency");
    if (kind == GridKind::odd_sparse && options.group_size < 2)
        throw Error(ErrorCategory::config, "build_grid: odd_sparse needs group_size >= 2");
    if (kind == GridKind::odd_sparse && options.drops_per_group >= options.group_size)
        throw Error(ErrorCategory::config, "build_grid: drops_per_group must be < group_size");
    if (kind == GridKind::zippered && options.channel_index >= options.n_channels)
        throw Error(ErrorCategory::config, "build_grid: channel_index out of range");

    FrequencyGrid grid;
    grid.n_samples = n_samples;
    grid.sample_rate = sample_rate;
    grid.kind = kind;
    grid.seed = seed;
    const double f0 = grid.bin_resolution();

    auto lowest = static_cast<std::size_t>(std::ceil(f_min / f0 - 1e-9));
    auto highest = static_cast<std::size_t>(std::floor(f_max / f0 + 1e-9));
    lowest = std::max<std::size_t>(lowest, 1);
    highest = std::min(highest, n_samples / 2 - 1);
    if (lowest > highest)
        throw Error(ErrorCategory::config, "build_grid: band is empty after rounding to the grid");
    grid.band_min_bin = lowest;
    grid.band_max_bin = highest;

    std::vector<std::size_t> candidates;
    for (std::size_t k = lowest; k <= highest; ++k) {
        if (kind == GridKind::full) {
            candidates.push_back(k);
        } else if (k % 2 == 1) {
            candidates.push_back(k);
        }
    }
    if (candidates.empty())
        throw Error(ErrorCategory::config, "build_grid: no excitable lines in the requested band");

    switch (kind) {
        case GridKind::full:
        case GridKind::odd:
            grid.excited_bins = candidates;
            break;
        case GridKind::odd_sparse: {
            grid.group_size = options.group_size;
            grid.drops_per_group = options.drops_per_group;
            Rng rng(seed);
            std::size_t i = 0;
            while (i < candidates.size()) {
                const std::size_t group_end = std::min(i + options.group_size, candidates.size());
                const bool complete = (group_end - i) == options.group_size;
                if (complete) {
                    std::set<std::size_t> dropped;
                    while (dropped.size() < options.drops_per_group)
                        dropped.insert(i + static_cast<std::size_t>(rng.uniform() * options.group_size));
                    for (std::size_t j = i; j < group_end; ++j) {
                        if (dropped.count(j))
                            grid.detection_bins.push_back(candidates[j]);
                        else
                            grid.excited_bins.push_back(candidates[j]);
                    }
                } else {
                    for (std::size_t j = i; j < group_end; ++j) grid.excited_bins.push_back(candidates[j]);
                }
                i = group_end;
            }
            break;
        }
        case GridKind::zippered: {
            grid.channel_index = options.channel_index;
            grid.n_channels = options.n_channels;
            for (std::size_t j = 0; j < candidates.size(); ++j)
                if (j % options.n_channels == options.channel_index)
                    grid.excited_bins.push_back(candidates[j]);
            if (grid.excited_bins.empty())
                throw Error(ErrorCategory::config, "build_grid: zippered channel has no lines in band");
            break;
        }
    }
    return grid;
}

}  // namespace fdsi
