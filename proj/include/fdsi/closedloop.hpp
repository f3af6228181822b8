#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/spectral.hpp"

namespace fdsi {

/// Expected direct FRF measurement under feedback, per bin:
///
///   G_tilde = (G * S_RR - conj(C) * S_VV) / (S_RR + |C|^2 * S_VV)
///
/// which reduces to G when S_VV = 0 and to -1/C when S_RR = 0. Homogeneous of
/// degree zero in (S_RR, S_VV).
struct LoopPrediction {
    std::vector<cdouble> g_tilde;
    std::vector<bool> defined;  // false where both powers vanish
};

inline LoopPrediction predict_closed_loop_frf(const std::vector<cdouble>& g,
                                              const std::vector<cdouble>& c,
                                              const std::vector<double>& s_rr,
                                              const std::vector<double>& s_vv) {
    const std::size_t n = g.size();
    if (c.size() != n || s_rr.size() != n || s_vv.size() != n)
        throw Error(ErrorCategory::usage, "predict_closed_loop_frf: length mismatch");
    LoopPrediction out;
    out.g_tilde.assign(n, cdouble(0.0, 0.0));
    out.defined.assign(n, true);
    for (std::size_t k = 0; k < n; ++k) {
        if (s_rr[k] < 0.0 || s_vv[k] < 0.0)
            throw Error(ErrorCategory::usage, "predict_closed_loop_frf: negative power spectrum");
        const double denom = s_rr[k] + std::norm(c[k]) * s_vv[k];
        if (denom == 0.0) {
            out.defined[k] = false;
            continue;
        }
        out.g_tilde[k] = (g[k] * s_rr[k] - std::conj(c[k]) * s_vv[k]) / denom;
    }
    return out;
}

/// First-order feedback correction at the detection lines:
/// Y_corr(k_det) = Y(k_det) - G_check(k_det) U(k_det), with G_check the
/// complex-linear interpolation of Y/U between the two nearest excited
/// neighbours. For a loop with R(k_det) = 0 this recovers the disturbance V.
struct CorrectionResult {
    std::vector<std::size_t> bins;       // detection bins (odd and even classes)
    std::vector<cdouble> y_corrected;
    std::vector<cdouble> g_interpolated;
    std::vector<std::size_t> neighbor_lo, neighbor_hi;
    std::vector<std::size_t> uncorrected_bins;  // no excited neighbour inside the band
    /// Median excited-line SNR |Y|^2 / (var_Y / P), advisory only: the
    /// correction assumes the reference dominates there (20 dB keeps the bias
    /// on the interpolated FRF below 1%, 10 dB below 10%).
    double excited_snr_db = std::numeric_limits<double>::quiet_NaN();
};

inline CorrectionResult correct_feedback(const LineAverages& averages, const FrequencyGrid& grid) {
    CorrectionResult result;
    if (averages.has_variances) {
        std::vector<double> snr;
        for (std::size_t k : grid.excited_bins) {
            const double noise = averages.var_y[k] / static_cast<double>(averages.n_averages);
            if (noise > 0.0) snr.push_back(std::norm(averages.mean_y[k]) / noise);
        }
        if (!snr.empty()) {
            std::sort(snr.begin(), snr.end());
            result.excited_snr_db = power_db(snr[snr.size() / 2]);
        }
    }
    std::vector<std::size_t> targets = grid.detection_bins;
    for (std::size_t k : grid.even_detection_bins()) targets.push_back(k);
    std::sort(targets.begin(), targets.end());

    const auto& excited = grid.excited_bins;
    for (std::size_t k : targets) {
        const auto hi_it = std::upper_bound(excited.begin(), excited.end(), k);
        if (hi_it == excited.end() || hi_it == excited.begin()) {
            result.uncorrected_bins.push_back(k);
            continue;
        }
        const std::size_t k_hi = *hi_it;
        const std::size_t k_lo = *(hi_it - 1);
        const cdouble g_lo = averages.mean_y[k_lo] / averages.mean_u[k_lo];
        const cdouble g_hi = averages.mean_y[k_hi] / averages.mean_u[k_hi];
        const double t = static_cast<double>(k - k_lo) / static_cast<double>(k_hi - k_lo);
        const cdouble g_check = g_lo + (g_hi - g_lo) * t;
        result.bins.push_back(k);
        result.g_interpolated.push_back(g_check);
        result.y_corrected.push_back(averages.mean_y[k] - g_check * averages.mean_u[k]);
        result.neighbor_lo.push_back(k_lo);
        result.neighbor_hi.push_back(k_hi);
    }
    return result;
}

/// Indirect (reference-based) BLA estimate and the generalized stochastic
/// nonlinear distortions:
///
///   G_bla_r = S_YR / S_UR          (bias-free under feedback)
///   U~_S[m] = U_m - G_ur R_m,  Y~_S[m] = Y_m - G_yr R_m
///   Y_S[m]  = Y~_S[m] - G_bla_r U~_S[m]
///
/// with the cross spectra averaged over the M realizations.
struct IndirectEstimate {
    std::vector<std::size_t> bins;  // excited bins above the conditioning floor
    std::vector<cdouble> g_ur, g_yr, g_bla;
    std::vector<std::size_t> flagged_bins;  // |S_UR| below floor
    // residual spectra per realization over all bins 0..N/2
    std::vector<cvector> u_s_tilde, y_s_tilde, y_s;
    std::size_t n_realizations = 0;
};

inline IndirectEstimate indirect_frf(const SpectralSet& set, const FrfOptions& options = {}) {
    if (!set.spectra.count("r"))
        throw Error(ErrorCategory::usage, "indirect_frf: record has no reference channel");
    if (set.n_realizations < 2)
        throw Error(ErrorCategory::usage, "indirect_frf: need M >= 2 realizations for residuals");
    const std::size_t bins = set.n_bins();
    const std::size_t m_count = set.n_realizations;

    // period-averaged spectra per realization
    std::vector<cvector> u_m(m_count), y_m(m_count), r_m(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        u_m[m].assign(bins, cdouble(0.0, 0.0));
        y_m[m].assign(bins, cdouble(0.0, 0.0));
        r_m[m].assign(bins, cdouble(0.0, 0.0));
        for (std::size_t p = 0; p < set.n_periods; ++p)
            for (std::size_t k = 0; k < bins; ++k) {
                u_m[m][k] += set.spectrum("u", m, p)[k];
                y_m[m][k] += set.spectrum("y", m, p)[k];
                r_m[m][k] += set.spectrum("r", m, p)[k];
            }
        const double inv_p = 1.0 / static_cast<double>(set.n_periods);
        for (std::size_t k = 0; k < bins; ++k) {
            u_m[m][k] *= inv_p;
            y_m[m][k] *= inv_p;
            r_m[m][k] *= inv_p;
        }
    }

    cvector s_ur(bins, cdouble(0.0, 0.0)), s_yr(bins, cdouble(0.0, 0.0));
    std::vector<double> s_rr(bins, 0.0);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < bins; ++k) {
            s_ur[k] += u_m[m][k] * std::conj(r_m[m][k]);
            s_yr[k] += y_m[m][k] * std::conj(r_m[m][k]);
            s_rr[k] += std::norm(r_m[m][k]);
        }
    for (std::size_t k = 0; k < bins; ++k) {
        s_ur[k] /= static_cast<double>(m_count);
        s_yr[k] /= static_cast<double>(m_count);
        s_rr[k] /= static_cast<double>(m_count);
    }

    IndirectEstimate est;
    est.n_realizations = m_count;

    std::vector<double> s_ur_mag;
    for (std::size_t k : set.grid.excited_bins) s_ur_mag.push_back(std::abs(s_ur[k]));
    const double floor = detail::dip_floor(s_ur_mag, options.dip_floor_relative);

    cvector g_ur_full(bins, cdouble(0.0, 0.0)), g_yr_full(bins, cdouble(0.0, 0.0));
    cvector g_bla_full(bins, cdouble(0.0, 0.0));
    for (std::size_t i = 0; i < set.grid.excited_bins.size(); ++i) {
        const std::size_t k = set.grid.excited_bins[i];
        if (s_ur_mag[i] <= floor || s_rr[k] == 0.0) {
            est.flagged_bins.push_back(k);
            continue;
        }
        g_ur_full[k] = s_ur[k] / s_rr[k];
        g_yr_full[k] = s_yr[k] / s_rr[k];
        g_bla_full[k] = s_yr[k] / s_ur[k];
        est.bins.push_back(k);
        est.g_ur.push_back(g_ur_full[k]);
        est.g_yr.push_back(g_yr_full[k]);
        est.g_bla.push_back(g_bla_full[k]);
    }

    est.u_s_tilde.assign(m_count, cvector(bins, cdouble(0.0, 0.0)));
    est.y_s_tilde.assign(m_count, cvector(bins, cdouble(0.0, 0.0)));
    est.y_s.assign(m_count, cvector(bins, cdouble(0.0, 0.0)));
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < bins; ++k) {
            est.u_s_tilde[m][k] = u_m[m][k] - g_ur_full[k] * r_m[m][k];
            est.y_s_tilde[m][k] = y_m[m][k] - g_yr_full[k] * r_m[m][k];
            est.y_s[m][k] = est.y_s_tilde[m][k] - g_bla_full[k] * est.u_s_tilde[m][k];
        }
    return est;
}

}  // namespace fdsi
