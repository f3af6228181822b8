#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/fft.hpp"
#include "fdsi/multisine.hpp"
#include "fdsi/record.hpp"

namespace fdsi {

/// Per-period DFT spectra of every channel of a Record, on bins 0..N/2.
/// Produced only from integer-period segments, so the lines are leakage-free.
struct SpectralSet {
    double sample_rate = 0.0;
    std::size_t n_samples = 0;  // per period
    std::size_t n_periods = 0;
    std::size_t n_realizations = 0;
    FrequencyGrid grid;
    // spectra[channel][realization][period] -> bins 0..N/2
    std::map<std::string, std::vector<std::vector<cvector>>> spectra;

    std::size_t n_bins() const { return n_samples / 2 + 1; }

    const cvector& spectrum(const std::string& channel, std::size_t m, std::size_t p) const {
        return spectra.at(channel)[m][p];
    }
};

inline SpectralSet period_dfts(const Record& record) {
    record.validate();
    SpectralSet set;
    set.sample_rate = record.sample_rate;
    set.n_samples = record.n_samples_per_period;
    set.n_periods = record.n_periods;
    set.n_realizations = record.n_realizations;
    set.grid = record.grid;
    for (const auto& [name, data] : record.channels) {
        (void)data;
        auto& per_channel = set.spectra[name];
        per_channel.assign(record.n_realizations, std::vector<cvector>(record.n_periods));
        for (std::size_t m = 0; m < record.n_realizations; ++m)
            for (std::size_t p = 0; p < record.n_periods; ++p) {
                const auto seg = record.period(name, m, p);
                per_channel[m][p] = rfft(std::vector<double>(seg.begin(), seg.end()));
            }
    }
    return set;
}

/// Sample means and (co)variances of the input/output line spectra:
///
///   var(k)   = 1/(n-1) sum_l |X[l](k) - mean(k)|^2
///   covar(k) = 1/(n-1) sum_l (Y[l](k) - meanY(k)) * conj(U[l](k) - meanU(k))
///
/// The variance of the mean value is var(k)/n.
struct LineAverages {
    std::vector<cdouble> mean_u, mean_y;
    std::vector<double> var_u, var_y;
    std::vector<cdouble> covar_yu;
    std::size_t n_averages = 0;
    bool has_variances = false;  // false when only one spectrum was available

    std::size_t n_bins() const { return mean_u.size(); }
};

namespace detail {

inline LineAverages average_lines(const std::vector<const cvector*>& u_specs,
                                  const std::vector<const cvector*>& y_specs) {
    const std::size_t n = u_specs.size();
    if (n == 0) throw Error(ErrorCategory::usage, "line_statistics: no spectra in scope");
    const std::size_t bins = u_specs[0]->size();
    LineAverages avg;
    avg.n_averages = n;
    avg.mean_u.assign(bins, cdouble(0.0, 0.0));
    avg.mean_y.assign(bins, cdouble(0.0, 0.0));
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < bins; ++k) {
            avg.mean_u[k] += (*u_specs[l])[k];
            avg.mean_y[k] += (*y_specs[l])[k];
        }
    for (std::size_t k = 0; k < bins; ++k) {
        avg.mean_u[k] /= static_cast<double>(n);
        avg.mean_y[k] /= static_cast<double>(n);
    }
    if (n >= 2) {
        avg.has_variances = true;
        avg.var_u.assign(bins, 0.0);
        avg.var_y.assign(bins, 0.0);
        avg.covar_yu.assign(bins, cdouble(0.0, 0.0));
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t k = 0; k < bins; ++k) {
                const cdouble du = (*u_specs[l])[k] - avg.mean_u[k];
                const cdouble dy = (*y_specs[l])[k] - avg.mean_y[k];
                avg.var_u[k] += std::norm(du);
                avg.var_y[k] += std::norm(dy);
                avg.covar_yu[k] += dy * std::conj(du);
            }
        for (std::size_t k = 0; k < bins; ++k) {
            avg.var_u[k] /= static_cast<double>(n - 1);
            avg.var_y[k] /= static_cast<double>(n - 1);
            avg.covar_yu[k] /= static_cast<double>(n - 1);
        }
    }
    return avg;
}

}  // namespace detail

/// Pools every period of every realization into one set of line statistics.
inline LineAverages pooled_line_statistics(const SpectralSet& set, const std::string& in = "u",
                                           const std::string& out = "y") {
    std::vector<const cvector*> u_specs, y_specs;
    for (std::size_t m = 0; m < set.n_realizations; ++m)
        for (std::size_t p = 0; p < set.n_periods; ++p) {
            u_specs.push_back(&set.spectrum(in, m, p));
            y_specs.push_back(&set.spectrum(out, m, p));
        }
    return detail::average_lines(u_specs, y_specs);
}

/// Per-realization statistics over the P periods; the period-to-period
/// variance isolates the disturbing noise because the nonlinear distortions
/// repeat exactly over periods.
inline std::vector<LineAverages> per_realization_line_statistics(const SpectralSet& set,
                                                                 const std::string& in = "u",
                                                                 const std::string& out = "y") {
    std::vector<LineAverages> out_stats;
    out_stats.reserve(set.n_realizations);
    for (std::size_t m = 0; m < set.n_realizations; ++m) {
        std::vector<const cvector*> u_specs, y_specs;
        for (std::size_t p = 0; p < set.n_periods; ++p) {
            u_specs.push_back(&set.spectrum(in, m, p));
            y_specs.push_back(&set.spectrum(out, m, p));
        }
        out_stats.push_back(detail::average_lines(u_specs, y_specs));
    }
    return out_stats;
}

enum class BinClass { excited, odd_detection, even_detection, out_of_band };

inline const char* bin_class_name(BinClass c) {
    switch (c) {
        case BinClass::excited: return "excited";
        case BinClass::odd_detection: return "odd_detection";
        case BinClass::even_detection: return "even_detection";
        case BinClass::out_of_band: return "out_of_band";
    }
    return "unknown";
}

/// Per-bin distortion classification. The class derives only from the grid;
/// levels are mean output power across realizations, the noise floor is the
/// variance of the mean (var_Y/P) averaged the same way.
struct DistortionReport {
    std::vector<BinClass> bin_class;     // per bin 0..N/2
    std::vector<double> level_db;        // mean |Y|^2 across realizations, dB re 1
    std::vector<double> noise_floor_db;  // var_Y/P, dB re 1 (absent -> -400)
    double excited_level_db = -400.0;    // per-class aggregates (median line power)
    double odd_detection_level_db = -400.0;
    double even_detection_level_db = -400.0;
    double noise_level_db = -400.0;
    bool has_noise_floor = false;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return -400.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline DistortionReport classify_distortions(const std::vector<LineAverages>& per_realization,
                                             const FrequencyGrid& grid) {
    if (per_realization.empty())
        throw Error(ErrorCategory::usage, "classify_distortions: no realizations");
    const std::size_t bins = per_realization[0].n_bins();
    const double inv_m = 1.0 / static_cast<double>(per_realization.size());

    DistortionReport report;
    report.bin_class.assign(bins, BinClass::out_of_band);
    for (std::size_t k : grid.excited_bins) report.bin_class[k] = BinClass::excited;
    for (std::size_t k : grid.detection_bins) report.bin_class[k] = BinClass::odd_detection;
    for (std::size_t k : grid.even_detection_bins()) report.bin_class[k] = BinClass::even_detection;

    report.level_db.assign(bins, -400.0);
    report.noise_floor_db.assign(bins, -400.0);
    report.has_noise_floor = per_realization[0].has_variances;
    std::vector<double> excited_p, odd_p, even_p, noise_p;
    for (std::size_t k = 0; k < bins; ++k) {
        double power = 0.0, floor = 0.0;
        for (const auto& avg : per_realization) {
            power += std::norm(avg.mean_y[k]) * inv_m;
            if (avg.has_variances)
                floor += avg.var_y[k] / static_cast<double>(avg.n_averages) * inv_m;
        }
        report.level_db[k] = power_db(power);
        if (report.has_noise_floor) report.noise_floor_db[k] = power_db(floor);
        switch (report.bin_class[k]) {
            case BinClass::excited: excited_p.push_back(power); break;
            case BinClass::odd_detection: odd_p.push_back(power); break;
            case BinClass::even_detection: even_p.push_back(power); break;
            case BinClass::out_of_band: break;
        }
        if (report.has_noise_floor && grid.in_band(k)) noise_p.push_back(floor);
    }
    report.excited_level_db = power_db(detail::median(std::move(excited_p)));
    report.odd_detection_level_db = power_db(detail::median(std::move(odd_p)));
    report.even_detection_level_db = power_db(detail::median(std::move(even_p)));
    if (report.has_noise_floor) report.noise_level_db = power_db(detail::median(std::move(noise_p)));
    return report;
}

inline DistortionReport classify_distortions(const LineAverages& averages, const FrequencyGrid& grid) {
    return classify_distortions(std::vector<LineAverages>{averages}, grid);
}

/// Nonparametric FRF estimate with its variance decomposition. Bins with an
/// input-power dip below the configured floor are excluded and listed in
/// flagged_bins instead.
struct FrfEstimate {
    std::vector<std::size_t> bins;
    std::vector<cdouble> g;
    std::vector<double> var_noise;  // noise-induced variance of the reported FRF
    std::vector<double> var_total;  // noise + stochastic nonlinearities (robust method)
    bool has_var_noise = false;
    bool has_var_total = false;
    std::size_t n_realizations = 0;
    std::size_t n_periods = 0;
    std::vector<std::size_t> flagged_bins;  // ill-conditioned (input dip)

    std::optional<std::size_t> index_of(std::size_t bin) const {
        const auto it = std::lower_bound(bins.begin(), bins.end(), bin);
        if (it == bins.end() || *it != bin) return std::nullopt;
        return static_cast<std::size_t>(it - bins.begin());
    }
};

struct FrfOptions {
    /// Bins whose input power falls below dip_floor_relative times the band
    /// median are flagged instead of returned.
    double dip_floor_relative = 1e-12;
};

namespace detail {

inline double dip_floor(const std::vector<double>& input_power, double relative) {
    std::vector<double> nonzero;
    for (double p : input_power)
        if (p > 0.0) nonzero.push_back(p);
    if (nonzero.empty()) return 0.0;
    return median(std::move(nonzero)) * relative;
}

/// Variance of G = Y/U propagated from the line (co)variances of the means.
inline double division_variance(const LineAverages& avg, std::size_t k) {
    const double n = static_cast<double>(avg.n_averages);
    const cdouble g = avg.mean_y[k] / avg.mean_u[k];
    const double y2 = std::norm(avg.mean_y[k]);
    const double u2 = std::norm(avg.mean_u[k]);
    if (y2 == 0.0) return avg.var_y[k] / n / u2;
    const double rel = avg.var_y[k] / y2 + avg.var_u[k] / u2 -
                       2.0 * std::real(avg.covar_yu[k] / (avg.mean_y[k] * std::conj(avg.mean_u[k])));
    return std::norm(g) * rel / n;
}

}  // namespace detail

/// Division estimate G(k) = mean_Y(k) / mean_U(k) at the excited bins, with
/// the disturbing-noise variance of the estimate attached when period
/// variances are available. Periodic excitation makes the leakage variance
/// identically zero here.
inline FrfEstimate estimate_frf(const LineAverages& averages, const FrequencyGrid& grid,
                                const FrfOptions& options = {}) {
    FrfEstimate est;
    est.n_realizations = 1;
    est.n_periods = averages.n_averages;
    est.has_var_noise = averages.has_variances;

    std::vector<double> input_power;
    for (std::size_t k : grid.excited_bins) input_power.push_back(std::norm(averages.mean_u[k]));
    const double floor = detail::dip_floor(input_power, options.dip_floor_relative);

    for (std::size_t i = 0; i < grid.excited_bins.size(); ++i) {
        const std::size_t k = grid.excited_bins[i];
        if (input_power[i] <= floor) {
            est.flagged_bins.push_back(k);
            continue;
        }
        est.bins.push_back(k);
        est.g.push_back(averages.mean_y[k] / averages.mean_u[k]);
        if (averages.has_variances) est.var_noise.push_back(detail::division_variance(averages, k));
    }
    return est;
}

/// Block-averaged cross/auto power estimator over every spectrum in the set:
///
///   S_YU(k) = 1/P sum_l Y[l](k) conj(U[l](k)),  S_UU(k) = 1/P sum_l |U[l](k)|^2
///
/// and G(k) = S_YU/S_UU at all bins above the dip floor. Intended for random
/// (non-periodic) excitation split into blocks; the variance estimate lumps
/// leakage and noise together via the residual power.
inline FrfEstimate estimate_frf_cross_spectral(const SpectralSet& set, const std::string& in = "u",
                                               const std::string& out = "y",
                                               const FrfOptions& options = {}) {
    const std::size_t bins = set.n_bins();
    std::vector<cdouble> s_yu(bins, cdouble(0.0, 0.0));
    std::vector<double> s_uu(bins, 0.0), s_yy(bins, 0.0);
    std::size_t count = 0;
    for (std::size_t m = 0; m < set.n_realizations; ++m)
        for (std::size_t p = 0; p < set.n_periods; ++p) {
            const auto& u = set.spectrum(in, m, p);
            const auto& y = set.spectrum(out, m, p);
            for (std::size_t k = 0; k < bins; ++k) {
                s_yu[k] += y[k] * std::conj(u[k]);
                s_uu[k] += std::norm(u[k]);
                s_yy[k] += std::norm(y[k]);
            }
            ++count;
        }
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < bins; ++k) {
        s_yu[k] *= inv;
        s_uu[k] *= inv;
        s_yy[k] *= inv;
    }

    FrfEstimate est;
    est.n_realizations = set.n_realizations;
    est.n_periods = set.n_periods;
    est.has_var_noise = count >= 2;
    const double floor = detail::dip_floor(s_uu, options.dip_floor_relative);
    for (std::size_t k = 1; k + 1 < bins; ++k) {
        if (s_uu[k] <= floor || s_uu[k] == 0.0) {
            est.flagged_bins.push_back(k);
            continue;
        }
        est.bins.push_back(k);
        est.g.push_back(s_yu[k] / s_uu[k]);
        if (est.has_var_noise) {
            const double residual = std::max(0.0, s_yy[k] - std::norm(s_yu[k]) / s_uu[k]);
            const double sigma2 = residual * static_cast<double>(count) / static_cast<double>(count - 1);
            est.var_noise.push_back(sigma2 / (static_cast<double>(count) * s_uu[k]));
        }
    }
    return est;
}

/// Robust method: level 1 averages each realization over its periods (noise
/// variance, unaffected by the nonlinear distortions), level 2 averages the
/// per-realization FRFs over realizations (total variance = noise +
/// stochastic nonlinearities). Both variances describe the reported mean FRF.
inline FrfEstimate robust_method(const Record& record, const FrfOptions& options = {}) {
    const auto set = period_dfts(record);
    const auto stats = per_realization_line_statistics(set);
    const std::size_t m_count = stats.size();
    const auto& grid = record.grid;

    // dip guard on the across-realization mean input power
    std::vector<double> input_power(grid.excited_bins.size(), 0.0);
    for (std::size_t i = 0; i < grid.excited_bins.size(); ++i)
        for (const auto& s : stats)
            input_power[i] += std::norm(s.mean_u[grid.excited_bins[i]]) / static_cast<double>(m_count);
    const double floor = detail::dip_floor(input_power, options.dip_floor_relative);

    FrfEstimate est;
    est.n_realizations = m_count;
    est.n_periods = record.n_periods;
    est.has_var_noise = stats[0].has_variances;
    est.has_var_total = m_count >= 2;

    for (std::size_t i = 0; i < grid.excited_bins.size(); ++i) {
        const std::size_t k = grid.excited_bins[i];
        if (input_power[i] <= floor) {
            est.flagged_bins.push_back(k);
            continue;
        }
        cdouble g_mean(0.0, 0.0);
        std::vector<cdouble> g_m(m_count);
        double noise_acc = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            g_m[m] = stats[m].mean_y[k] / stats[m].mean_u[k];
            g_mean += g_m[m];
            if (est.has_var_noise) noise_acc += detail::division_variance(stats[m], k);
        }
        g_mean /= static_cast<double>(m_count);
        est.bins.push_back(k);
        est.g.push_back(g_mean);
        if (est.has_var_noise)
            est.var_noise.push_back(noise_acc / static_cast<double>(m_count * m_count));
        if (est.has_var_total) {
            double scatter = 0.0;
            for (const auto& g : g_m) scatter += std::norm(g - g_mean);
            scatter /= static_cast<double>(m_count - 1);
            est.var_total.push_back(scatter / static_cast<double>(m_count));
        }
    }
    return est;
}

/// Per-bin MIMO FRF matrix from n_u simultaneous experiments with (ideally
/// orthogonal) inputs. Records carry channels u0..u{n-1}, y0..y{n-1}; per
/// excited bin the n_u x n_u system Y = G U is solved across experiments.
struct MimoFrfEstimate {
    std::vector<std::size_t> bins;
    std::vector<std::vector<cdouble>> g;  // per bin, row-major n_out x n_in
    std::vector<double> condition;        // per bin condition number of U
    std::size_t n_inputs = 0;
    std::size_t n_outputs = 0;
    std::vector<std::size_t> flagged_bins;  // condition number above threshold
};

namespace detail {

/// Eigenvalues of a small real symmetric matrix by cyclic Jacobi sweeps.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> h, std::size_t n) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += h[p * n + q] * h[p * n + q];
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = h[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * apq, h[q * n + q] - h[p * n + p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double hkp = h[k * n + p], hkq = h[k * n + q];
                    h[k * n + p] = c * hkp - s * hkq;
                    h[k * n + q] = s * hkp + c * hkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double hpk = h[p * n + k], hqk = h[q * n + k];
                    h[p * n + k] = c * hpk - s * hqk;
                    h[q * n + k] = s * hpk + c * hqk;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = h[i * n + i];
    return eig;
}

/// 2-norm condition number of a small complex matrix via the eigenvalues of
/// A^H A, embedded as the real symmetric matrix [[Re,-Im],[Im,Re]].
inline double condition_number(const std::vector<cdouble>& a, std::size_t n) {
    std::vector<cdouble> h(n * n, cdouble(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cdouble acc(0.0, 0.0);
            for (std::size_t k = 0; k < n; ++k) acc += std::conj(a[k * n + i]) * a[k * n + j];
            h[i * n + j] = acc;
        }
    const std::size_t m = 2 * n;
    std::vector<double> real_h(m * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            real_h[i * m + j] = h[i * n + j].real();
            real_h[(i + n) * m + (j + n)] = h[i * n + j].real();
            real_h[i * m + (j + n)] = -h[i * n + j].imag();
            real_h[(i + n) * m + j] = h[i * n + j].imag();
        }
    const auto eig = symmetric_eigenvalues(std::move(real_h), m);
    double lo = 1e300, hi = 0.0;
    for (double lambda : eig) {
        lambda = std::max(0.0, lambda);
        lo = std::min(lo, lambda);
        hi = std::max(hi, lambda);
    }
    if (lo <= 0.0) return 1e300;
    return std::sqrt(hi / lo);
}

/// Solves A X = B for X (A: n x n, B: n x m, column-major rhs list) by
/// Gaussian elimination with partial pivoting.
inline std::vector<cdouble> solve_linear(std::vector<cdouble> a, std::vector<cdouble> b,
                                         std::size_t n, std::size_t m) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
        if (std::abs(a[pivot * n + col]) < 1e-300)
            throw Error(ErrorCategory::numeric, "solve_linear: singular matrix");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            for (std::size_t j = 0; j < m; ++j) std::swap(b[col * m + j], b[pivot * m + j]);
        }
        const cdouble inv = 1.0 / a[col * n + col];
        for (std::size_t row = col + 1; row < n; ++row) {
            const cdouble factor = a[row * n + col] * inv;
            if (factor == cdouble(0.0, 0.0)) continue;
            for (std::size_t j = col; j < n; ++j) a[row * n + j] -= factor * a[col * n + j];
            for (std::size_t j = 0; j < m; ++j) b[row * m + j] -= factor * b[col * m + j];
        }
    }
    std::vector<cdouble> x(n * m);
    for (std::size_t row = n; row-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) {
            cdouble acc = b[row * m + j];
            for (std::size_t col = row + 1; col < n; ++col) acc -= a[row * n + col] * x[col * m + j];
            x[row * m + j] = acc / a[row * n + row];
        }
    }
    return x;
}

}  // namespace detail

struct MimoOptions {
    double condition_threshold = 1e6;
};

inline MimoFrfEstimate mimo_frf(const std::vector<Record>& experiments, std::size_t n_inputs,
                                const MimoOptions& options = {}) {
    if (experiments.size() != n_inputs)
        throw Error(ErrorCategory::usage, "mimo_frf: need one record per experiment (n_u experiments)");
    std::size_t n_outputs = 0;
    while (experiments[0].has_channel("y" + std::to_string(n_outputs))) ++n_outputs;
    if (n_outputs == 0) throw Error(ErrorCategory::usage, "mimo_frf: records carry no y0..y{n-1} channels");

    // mean-over-everything line spectra per experiment and channel
    std::vector<std::map<std::string, cvector>> means(experiments.size());
    for (std::size_t e = 0; e < experiments.size(); ++e) {
        const auto set = period_dfts(experiments[e]);
        for (const auto& [name, per_real] : set.spectra) {
            cvector mean(set.n_bins(), cdouble(0.0, 0.0));
            std::size_t count = 0;
            for (const auto& periods : per_real)
                for (const auto& spec : periods) {
                    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += spec[k];
                    ++count;
                }
            for (auto& v : mean) v /= static_cast<double>(count);
            means[e][name] = std::move(mean);
        }
    }

    MimoFrfEstimate est;
    est.n_inputs = n_inputs;
    est.n_outputs = n_outputs;
    for (std::size_t k : experiments[0].grid.excited_bins) {
        // U[i][e], Y[o][e]
        std::vector<cdouble> u_mat(n_inputs * n_inputs), y_mat(n_outputs * n_inputs);
        for (std::size_t e = 0; e < n_inputs; ++e) {
            for (std::size_t i = 0; i < n_inputs; ++i)
                u_mat[i * n_inputs + e] = means[e].at("u" + std::to_string(i))[k];
            for (std::size_t o = 0; o < n_outputs; ++o)
                y_mat[o * n_inputs + e] = means[e].at("y" + std::to_string(o))[k];
        }
        const double cond = detail::condition_number(u_mat, n_inputs);
        if (cond > options.condition_threshold) {
            est.flagged_bins.push_back(k);
            continue;
        }
        // G = Y U^{-1}  <=>  U^T G^T = Y^T
        std::vector<cdouble> ut(n_inputs * n_inputs), yt(n_inputs * n_outputs);
        for (std::size_t i = 0; i < n_inputs; ++i)
            for (std::size_t e = 0; e < n_inputs; ++e) ut[e * n_inputs + i] = u_mat[i * n_inputs + e];
        for (std::size_t o = 0; o < n_outputs; ++o)
            for (std::size_t e = 0; e < n_inputs; ++e) yt[e * n_outputs + o] = y_mat[o * n_inputs + e];
        const auto gt = detail::solve_linear(std::move(ut), std::move(yt), n_inputs, n_outputs);
        std::vector<cdouble> g(n_outputs * n_inputs);
        for (std::size_t o = 0; o < n_outputs; ++o)
            for (std::size_t i = 0; i < n_inputs; ++i) g[o * n_inputs + i] = gt[i * n_outputs + o];
        est.bins.push_back(k);
        est.g.push_back(std::move(g));
        est.condition.push_back(cond);
    }
    return est;
}

/// Higher-order sinusoidal input describing function (one curve point per
/// record): G_k(f0, a) = Y(k f0) / U_s(f0)^k with the lines taken in the
/// Fourier-coefficient convention (DFT value / N), so an amplitude-a cosine
/// has fundamental line a/2.
struct HosidfCurve {
    std::size_t order = 0;
    double amplitude = 0.0;                 // cosine amplitude of the fundamental
    std::vector<double> fundamental_hz;     // per record
    std::vector<cdouble> gain;              // per record
};

inline HosidfCurve hosidf(const std::vector<Record>& sine_records, std::size_t order) {
    if (order < 1) throw Error(ErrorCategory::usage, "hosidf: order must be >= 1");
    HosidfCurve curve;
    curve.order = order;
    for (const auto& record : sine_records) {
        if (record.grid.excited_bins.size() != 1)
            throw Error(ErrorCategory::usage, "hosidf: each record must excite exactly one bin");
        const std::size_t k0 = record.grid.excited_bins[0];
        const std::size_t kh = k0 * order;
        if (kh > record.n_samples_per_period / 2)
            throw Error(ErrorCategory::usage, "hosidf: harmonic falls outside the measured grid");
        const auto set = period_dfts(record);
        const auto avg = pooled_line_statistics(set);
        const double n = static_cast<double>(record.n_samples_per_period);
        const cdouble u_line = avg.mean_u[k0] / n;
        const cdouble y_line = avg.mean_y[kh] / n;
        cdouble u_pow(1.0, 0.0);
        for (std::size_t i = 0; i < order; ++i) u_pow *= u_line;
        curve.fundamental_hz.push_back(record.grid.bin_frequency(k0));
        curve.gain.push_back(y_line / u_pow);
        curve.amplitude = 2.0 * std::abs(u_line);
    }
    return curve;
}

}  // namespace fdsi
