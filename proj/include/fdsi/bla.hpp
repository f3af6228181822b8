#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/lti.hpp"
#include "fdsi/plant.hpp"
#include "fdsi/random.hpp"

namespace fdsi {

/// Central moments of a zero-mean Gaussian: mu_a = 0 for odd a,
/// mu_{2m} = (2m-1)!! sigma^{2m}. Each tabulated value is cross-checked
/// against Simpson quadrature of x^a phi(x) at construction.
class GaussianMoments {
public:
    GaussianMoments(double std_dev, unsigned max_order) : std_dev_(std_dev) {
        if (std_dev <= 0.0) throw Error(ErrorCategory::usage, "GaussianMoments: std_dev must be positive");
        moments_.resize(max_order + 1, 0.0);
        moments_[0] = 1.0;
        for (unsigned a = 2; a <= max_order; a += 2)
            moments_[a] = moments_[a - 2] * (a - 1) * std_dev * std_dev;
        verify_against_quadrature();
    }

    double moment(unsigned order) const {
        if (order >= moments_.size())
            throw Error(ErrorCategory::usage, "GaussianMoments: order beyond construction bound");
        return moments_[order];
    }
    double std_dev() const { return std_dev_; }

private:
    void verify_against_quadrature() const {
        // Simpson over [-12 sigma, 12 sigma]
        const int steps = 4000;
        const double lo = -12.0 * std_dev_, hi = 12.0 * std_dev_;
        const double h = (hi - lo) / steps;
        for (unsigned a = 2; a < moments_.size(); a += 2) {
            double acc = 0.0;
            for (int i = 0; i <= steps; ++i) {
                const double x = lo + i * h;
                const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                acc += w * std::pow(x, a) * std::exp(-x * x / (2.0 * std_dev_ * std_dev_));
            }
            acc *= h / 3.0 / (std_dev_ * std::sqrt(2.0 * kPi));
            if (std::abs(acc - moments_[a]) > 1e-6 * std::abs(moments_[a]))
                throw Error(ErrorCategory::numeric, "GaussianMoments: quadrature cross-check failed");
        }
    }

    double std_dev_;
    std::vector<double> moments_;
};

/// Bussgang gain of a static polynomial under zero-mean Gaussian excitation:
/// a_bla = sum_k a_k mu_{k+1} / mu_2. Only odd degrees contribute.
inline double theoretical_bla_static(const StaticPolynomial& poly, double std_dev) {
    GaussianMoments mu(std_dev, static_cast<unsigned>(poly.coefficients.size()) + 1);
    double acc = 0.0;
    for (std::size_t k = 1; k <= poly.coefficients.size(); ++k)
        acc += poly.coefficients[k - 1] * mu.moment(static_cast<unsigned>(k + 1));
    return acc / mu.moment(2);
}

/// Which branch the |.|^2 weights in the Wiener-Hammerstein BLA sum refer to.
/// front_filter weights with |R(l)|^2 (the signal entering the static
/// nonlinearity); back_filter reproduces the formula with |S(l)|^2 as printed
/// in some sources. The Monte-Carlo agreement tests arbitrate: front_filter
/// matches simulation.
enum class WhSumConvention { front_filter, back_filter };

/// BLA of a Wiener-Hammerstein system R -> (c1 x + c3 x^3) -> S excited by a
/// random-phase multisine, per excited bin k:
///
///   G_bla(k) = c1 S(k)R(k)
///            + c3 [ 6 S(k)R(k) sum_l |R(l)|^2 |A_l|^2
///                   - 3 S(k)R(k) |R(k)|^2 |A_k|^2 ]
///
/// where A_l is the complex Fourier coefficient of the input line at bin l
/// (half the per-cosine peak amplitude) and the second term is the l = k
/// correction: only 3 permutations exist there instead of 6.
inline std::map<std::size_t, cdouble> theoretical_bla_wh_cubic(
    const LtiFilter& front, const LtiFilter& back,
    const std::map<std::size_t, double>& line_amplitudes, std::size_t n_samples,
    double c1 = 0.0, double c3 = 1.0,
    WhSumConvention convention = WhSumConvention::front_filter) {
    if (line_amplitudes.empty())
        throw Error(ErrorCategory::usage, "theoretical_bla_wh_cubic: no excited lines");

    std::map<std::size_t, double> weighted_power;  // |R(l)|^2 |A_l|^2 (or |S(l)|^2 ...)
    double total = 0.0;
    for (const auto& [bin, amp] : line_amplitudes) {
        const cdouble w = (convention == WhSumConvention::front_filter)
                              ? front.response_at_bin(bin, n_samples)
                              : back.response_at_bin(bin, n_samples);
        const double p = std::norm(w) * amp * amp;
        weighted_power[bin] = p;
        total += p;
    }

    std::map<std::size_t, cdouble> g;
    for (const auto& [bin, amp] : line_amplitudes) {
        (void)amp;
        const cdouble sr = back.response_at_bin(bin, n_samples) * front.response_at_bin(bin, n_samples);
        g[bin] = c1 * sr + c3 * sr * (6.0 * total - 3.0 * weighted_power[bin]);
    }
    return g;
}

/// Outcome of the parametric-variance underestimation experiment on y = u^n.
struct VarianceRatioResult {
    double observed_variance = 0.0;      // variance of the toy gain across trials
    double independent_theory = 0.0;     // mean of the per-trial linear-theory variance
    double ratio = 0.0;                  // observed / theory; tends to 2n+1
    double mean_gain = 0.0;              // converges to the Bussgang value
    unsigned degree = 0;
};

/// Repeats the toy estimator a = sum(y u)/sum(u^2) on y = u^n with white
/// Gaussian input and compares the across-trial variance with the variance
/// the independent-noise theory predicts from the per-trial residuals. The
/// ratio approaches 2n+1.
inline VarianceRatioResult variance_ratio_experiment(unsigned degree, std::size_t n_trials,
                                                     std::size_t n_samples, double std_dev,
                                                     std::uint64_t seed) {
    if (degree < 2)
        throw Error(ErrorCategory::usage,
                    "variance_ratio_experiment: degree 1 is degenerate (zero residuals)");
    if (n_trials < 2 || n_samples < 2)
        throw Error(ErrorCategory::usage, "variance_ratio_experiment: need n_trials, n_samples >= 2");

    std::vector<double> gains(n_trials);
    double theory_acc = 0.0;
    for (std::size_t trial = 0; trial < n_trials; ++trial) {
        Rng rng(derive_seed(seed, trial));
        double sum_yu = 0.0, sum_uu = 0.0;
        std::vector<double> u(n_samples);
        for (auto& v : u) v = rng.normal(std_dev);
        for (double v : u) {
            double y = v;
            for (unsigned p = 1; p < degree; ++p) y *= v;
            sum_yu += y * v;
            sum_uu += v * v;
        }
        const double a = sum_yu / sum_uu;
        gains[trial] = a;
        double sum_e2 = 0.0;
        for (double v : u) {
            double y = v;
            for (unsigned p = 1; p < degree; ++p) y *= v;
            const double e = y - a * v;
            sum_e2 += e * e;
        }
        theory_acc += (sum_e2 / static_cast<double>(n_samples - 1)) / sum_uu;
    }

    VarianceRatioResult result;
    result.degree = degree;
    result.mean_gain = mean(gains);
    double var = 0.0;
    for (double g : gains) var += (g - result.mean_gain) * (g - result.mean_gain);
    result.observed_variance = var / static_cast<double>(n_trials - 1);
    result.independent_theory = theory_acc / static_cast<double>(n_trials);
    result.ratio = result.observed_variance / result.independent_theory;
    return result;
}

}  // namespace fdsi
