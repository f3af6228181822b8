#pragma once

#include <algorithm>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/fft.hpp"

namespace fdsi {

namespace detail {

/// Roots of a real polynomial c[0] + c[1] x + ... + c[n] x^n by Durand-Kerner
/// iteration. Adequate for the low-order denominators used here.
inline cvector polynomial_roots(const std::vector<double>& coeffs) {
    std::vector<double> c = coeffs;
    while (c.size() > 1 && std::abs(c.back()) < 1e-300) c.pop_back();
    const std::size_t degree = c.size() - 1;
    if (degree == 0) return {};

    cvector monic(degree + 1);
    for (std::size_t i = 0; i <= degree; ++i) monic[i] = c[i] / c[degree];

    auto eval = [&](cdouble x) {
        cdouble acc(0.0, 0.0);
        for (std::size_t i = degree + 1; i-- > 0;) acc = acc * x + monic[i];
        return acc;
    };

    cvector roots(degree);
    for (std::size_t i = 0; i < degree; ++i)
        roots[i] = std::polar(0.4 + 0.9 * static_cast<double>(i) / degree,
                              2.0 * kPi * static_cast<double>(i) / degree + 0.7);

    for (int iter = 0; iter < 500; ++iter) {
        double max_step = 0.0;
        for (std::size_t i = 0; i < degree; ++i) {
            cdouble denom(1.0, 0.0);
            for (std::size_t j = 0; j < degree; ++j)
                if (j != i) denom *= roots[i] - roots[j];
            if (std::abs(denom) < 1e-300) denom = cdouble(1e-300, 0.0);
            const cdouble step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        if (max_step < 1e-14) break;
    }
    return roots;
}

}  // namespace detail

/// Discrete-time rational filter in the delay operator:
///
///   H(z) = gain * (b0 + b1 z^-1 + ... ) / (1 + a1 z^-1 + ...)
///
/// The denominator leading coefficient is fixed to 1 and all poles must lie
/// strictly inside the unit circle; checked at construction.
class LtiFilter {
public:
    LtiFilter() : num_{1.0}, den_{1.0} {}

    LtiFilter(std::vector<double> numerator, std::vector<double> denominator, double gain = 1.0)
        : num_(std::move(numerator)), den_(std::move(denominator)) {
        if (num_.empty()) num_ = {0.0};
        if (den_.empty() || den_[0] != 1.0)
            throw Error(ErrorCategory::config, "LtiFilter: denominator must start with 1");
        for (auto& b : num_) b *= gain;
        check_stable();
    }

    static LtiFilter identity() { return LtiFilter({1.0}, {1.0}); }

    static LtiFilter gain(double g) { return LtiFilter({g}, {1.0}); }

    static LtiFilter delay(std::size_t samples, double g = 1.0) {
        std::vector<double> num(samples + 1, 0.0);
        num[samples] = g;
        return LtiFilter(num, {1.0});
    }

    /// Resonant two-pole section with poles at radius r and angle
    /// 2*pi*f_res/f_s, unit DC gain.
    static LtiFilter resonator(double f_res, double f_s, double pole_radius, double dc_gain = 1.0) {
        const double theta = 2.0 * kPi * f_res / f_s;
        const double a1 = -2.0 * pole_radius * std::cos(theta);
        const double a2 = pole_radius * pole_radius;
        const double b0 = dc_gain * (1.0 + a1 + a2);
        return LtiFilter({b0}, {1.0, a1, a2});
    }

    const std::vector<double>& numerator() const { return num_; }
    const std::vector<double>& denominator() const { return den_; }
    std::size_t order() const { return std::max(num_.size(), den_.size()) - 1; }

    bool is_identity() const {
        return num_.size() == 1 && num_[0] == 1.0 && den_.size() == 1;
    }

    /// Frequency response at normalized angular frequency omega = 2*pi*f/f_s,
    /// i.e. H evaluated at z = e^{j*omega}.
    cdouble response(double omega) const {
        const cdouble zinv = std::polar(1.0, -omega);
        cdouble num(0.0, 0.0), den(0.0, 0.0);
        for (std::size_t i = num_.size(); i-- > 0;) num = num * zinv + num_[i];
        for (std::size_t i = den_.size(); i-- > 0;) den = den * zinv + den_[i];
        return num / den;
    }

    /// Response at DFT bin k of an N-point grid.
    cdouble response_at_bin(std::size_t k, std::size_t n) const {
        return response(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
    }

    /// Time-domain difference-equation evaluation from zero initial state.
    std::vector<double> filter(const std::vector<double>& u) const {
        std::vector<double> y(u.size(), 0.0);
        for (std::size_t n = 0; n < u.size(); ++n) {
            double acc = 0.0;
            for (std::size_t i = 0; i < num_.size() && i <= n; ++i) acc += num_[i] * u[n - i];
            for (std::size_t j = 1; j < den_.size() && j <= n; ++j) acc -= den_[j] * y[n - j];
            y[n] = acc;
        }
        return y;
    }

    /// Exact steady-state response for a periodic input (period = u.size()),
    /// computed by per-bin multiplication in the frequency domain.
    std::vector<double> filter_periodic(const std::vector<double>& u) const {
        if (is_identity()) return u;
        const std::size_t n = u.size();
        cvector spec = rfft(u);
        for (std::size_t k = 0; k < spec.size(); ++k)
            spec[k] *= response(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
        return irfft(spec, n);
    }

    /// One-sample stepping with internal state (direct form II transposed);
    /// used by the closed-loop simulator.
    class Stepper {
    public:
        explicit Stepper(const LtiFilter& f) : filter_(&f) {
            state_.assign(std::max(f.num_.size(), f.den_.size()), 0.0);
        }
        double step(double input) {
            const auto& b = filter_->num_;
            const auto& a = filter_->den_;
            const std::size_t ns = state_.size();
            const double out = (ns > 0 ? state_[0] : 0.0) + (b.empty() ? 0.0 : b[0] * input);
            for (std::size_t i = 0; i + 1 < ns; ++i) {
                const double bi = (i + 1 < b.size()) ? b[i + 1] : 0.0;
                const double ai = (i + 1 < a.size()) ? a[i + 1] : 0.0;
                state_[i] = state_[i + 1] + bi * input - ai * out;
            }
            if (ns > 0) {
                const double bi = (ns < b.size()) ? b[ns] : 0.0;
                const double ai = (ns < a.size()) ? a[ns] : 0.0;
                state_[ns - 1] = bi * input - ai * out;
            }
            return out;
        }

    private:
        const LtiFilter* filter_;
        std::vector<double> state_;
    };

    Stepper stepper() const { return Stepper(*this); }

    /// Largest pole magnitude (0 for FIR).
    double pole_radius() const {
        std::vector<double> rev(den_.rbegin(), den_.rend());
        const auto roots = detail::polynomial_roots(rev);
        double radius = 0.0;
        for (const auto& r : roots) radius = std::max(radius, std::abs(r));
        return radius;
    }

private:
    void check_stable() const {
        if (den_.size() <= 1) return;
        // poles are roots of z^m + a1 z^{m-1} + ... + am, i.e. of the
        // reversed coefficient sequence
        if (pole_radius() >= 1.0 - 1e-12)
            throw Error(ErrorCategory::config, "LtiFilter: unstable (pole on or outside the unit circle)");
    }

    std::vector<double> num_;
    std::vector<double> den_;
};

/// Evaluates H with frequency responses tabulated on the excited bins of an
/// N-point grid.
inline cvector tabulate_response(const LtiFilter& f, const std::vector<std::size_t>& bins,
                                 std::size_t n) {
    cvector out(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) out[i] = f.response_at_bin(bins[i], n);
    return out;
}

}  // namespace fdsi
