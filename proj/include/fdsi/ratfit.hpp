#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdsi/common.hpp"
#include "fdsi/spectral.hpp"

namespace fdsi {

namespace detail {

/// Least-squares solve of A x = b (A: rows x cols, row-major) by Householder
/// QR with column pivoting. Columns whose pivot falls below rank_tol times
/// the largest pivot are reported as deficient instead of solved for.
struct LsqResult {
    std::vector<double> x;
    std::vector<std::size_t> deficient_columns;
};

inline LsqResult solve_least_squares(std::vector<double> a, std::vector<double> b,
                                     std::size_t rows, std::size_t cols,
                                     double rank_tol = 1e-12) {
    std::vector<std::size_t> perm(cols);
    for (std::size_t j = 0; j < cols; ++j) perm[j] = j;
    std::vector<double> col_norm2(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) col_norm2[j] += a[i * cols + j] * a[i * cols + j];

    std::vector<double> rdiag(cols, 0.0);
    const std::size_t steps = std::min(rows, cols);
    for (std::size_t k = 0; k < steps; ++k) {
        std::size_t pivot = k;
        for (std::size_t j = k + 1; j < cols; ++j)
            if (col_norm2[j] > col_norm2[pivot]) pivot = j;
        if (pivot != k) {
            for (std::size_t i = 0; i < rows; ++i)
                std::swap(a[i * cols + k], a[i * cols + pivot]);
            std::swap(col_norm2[k], col_norm2[pivot]);
            std::swap(perm[k], perm[pivot]);
        }
        double norm = 0.0;
        for (std::size_t i = k; i < rows; ++i) norm += a[i * cols + k] * a[i * cols + k];
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            rdiag[k] = 0.0;
            continue;
        }
        if (a[k * cols + k] < 0) norm = -norm;
        for (std::size_t i = k; i < rows; ++i) a[i * cols + k] /= norm;
        a[k * cols + k] += 1.0;
        // apply reflector to remaining columns and to b
        for (std::size_t j = k + 1; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < rows; ++i) s += a[i * cols + k] * a[i * cols + j];
            s /= a[k * cols + k];
            for (std::size_t i = k; i < rows; ++i) a[i * cols + j] -= s * a[i * cols + k];
            col_norm2[j] = 0.0;
            for (std::size_t i = k + 1; i < rows; ++i) col_norm2[j] += a[i * cols + j] * a[i * cols + j];
        }
        double s = 0.0;
        for (std::size_t i = k; i < rows; ++i) s += a[i * cols + k] * b[i];
        s /= a[k * cols + k];
        for (std::size_t i = k; i < rows; ++i) b[i] -= s * a[i * cols + k];
        rdiag[k] = norm;  // R(k,k) = -norm in sign convention; magnitude is what matters
    }

    LsqResult result;
    const double max_pivot = std::abs(rdiag.empty() ? 0.0 : rdiag[0]);
    std::vector<bool> usable(cols, false);
    for (std::size_t k = 0; k < steps; ++k) {
        if (std::abs(rdiag[k]) > rank_tol * max_pivot && rdiag[k] != 0.0)
            usable[k] = true;
        else
            result.deficient_columns.push_back(perm[k]);
    }
    for (std::size_t k = steps; k < cols; ++k) result.deficient_columns.push_back(perm[k]);

    // back substitution on R z = Q^T b; deficient directions pinned to zero
    std::vector<double> z(cols, 0.0);
    for (std::size_t k = steps; k-- > 0;) {
        if (!usable[k]) continue;
        double acc = b[k];
        for (std::size_t j = k + 1; j < cols; ++j) acc -= a[k * cols + j] * z[j];
        // diagonal of R lives implicitly: after the reflector, R(k,k) = -norm
        z[k] = acc / (-rdiag[k]);
    }
    result.x.assign(cols, 0.0);
    for (std::size_t k = 0; k < cols; ++k) result.x[perm[k]] = z[k];
    return result;
}

/// Inverse of a small symmetric positive definite matrix via Gauss-Jordan.
inline std::vector<double> invert_spd(std::vector<double> m, std::size_t n) {
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::abs(m[row * n + col]) > std::abs(m[pivot * n + col])) pivot = row;
        if (std::abs(m[pivot * n + col]) < 1e-300) return {};  // singular; caller degrades
        if (pivot != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m[col * n + j], m[pivot * n + j]);
                std::swap(inv[col * n + j], inv[pivot * n + j]);
            }
        const double d = m[col * n + col];
        for (std::size_t j = 0; j < n; ++j) {
            m[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col) continue;
            const double f = m[row * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m[row * n + j] -= f * m[col * n + j];
                inv[row * n + j] -= f * inv[col * n + j];
            }
        }
    }
    return inv;
}

}  // namespace detail

/// Discrete-time rational transfer-function model
/// G(z) = (b0 + b1 z^-1 + ...) / (1 + a1 z^-1 + ...); the denominator
/// constant term is fixed to 1 so the delay-free gain stays identifiable.
struct RationalModel {
    std::vector<double> numerator;    // b0..b_nb
    std::vector<double> denominator;  // 1, a1..a_na

    cdouble response(double omega) const {
        const cdouble zinv = std::polar(1.0, -omega);
        cdouble num(0.0, 0.0), den(0.0, 0.0);
        for (std::size_t i = numerator.size(); i-- > 0;) num = num * zinv + numerator[i];
        for (std::size_t i = denominator.size(); i-- > 0;) den = den * zinv + denominator[i];
        return num / den;
    }

    cdouble response_at_bin(std::size_t k, std::size_t n) const {
        return response(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
    }
};

struct FitOptions {
    std::size_t max_iterations = 200;
    double relative_cost_tolerance = 1e-10;
    /// Optional explicit per-bin standard deviations; empty = take them from
    /// the estimate (unit weights when the estimate carries none or all-zero).
    std::vector<double> weights_sigma;
};

struct FitResult {
    RationalModel model;
    double final_cost = 0.0;  // (1/F) sum |G_hat - G(theta)|^2 / sigma^2
    std::size_t iterations = 0;
    std::vector<std::size_t> bins;               // bins the fit was evaluated on
    std::vector<double> weighted_residuals;      // |G_hat - G(theta)| / sigma per bin
    std::vector<double> linear_theory_covariance;  // row-major (nb+1+na)^2; may be empty
    /// The linear-theory covariance assumes disturbances independent of the
    /// input; that fails for stochastic nonlinear distortions, so the bounds
    /// derived from it are not valid then. Always false.
    bool covariance_valid_under_nonlinear_distortions = false;
    std::string covariance_note = "unreliable under nonlinear distortions";
};

namespace detail {

inline std::string parameter_name(std::size_t index, std::size_t nb) {
    if (index <= nb) return "b" + std::to_string(index);
    return "a" + std::to_string(index - nb);
}

}  // namespace detail

/// Fits a rational model to the measured FRF by minimizing the weighted cost
/// V = (1/F) sum_k |G_hat(k) - G(Omega_k, theta)|^2 / sigma_k^2, with a
/// Levy-style linear initializer on the equation error followed by damped
/// Gauss-Newton steps on the true cost. Deterministic given inputs.
inline FitResult fit_frf(const FrfEstimate& frf, std::size_t n_samples, std::size_t n_num,
                         std::size_t n_den, const FitOptions& options = {}) {
    const std::size_t f_count = frf.bins.size();
    const std::size_t n_params = (n_num + 1) + n_den;
    if (f_count < n_params)
        throw Error(ErrorCategory::usage, "fit_frf: fewer excited bins than free parameters");

    std::vector<double> sigma(f_count, 1.0);
    if (!options.weights_sigma.empty()) {
        if (options.weights_sigma.size() != f_count)
            throw Error(ErrorCategory::usage, "fit_frf: weights_sigma size mismatch");
        sigma = options.weights_sigma;
        bool any = false;
        for (double s : sigma) any = any || s > 0.0;
        if (!any) throw Error(ErrorCategory::usage, "fit_frf: all-zero weights");
        for (double s : sigma)
            if (!(s > 0.0) || !std::isfinite(s))
                throw Error(ErrorCategory::usage, "fit_frf: weight sigmas must be positive and finite");
    } else {
        const std::vector<double>* var = nullptr;
        if (frf.has_var_total)
            var = &frf.var_total;
        else if (frf.has_var_noise)
            var = &frf.var_noise;
        bool usable = var != nullptr;
        if (usable)
            for (double v : *var) usable = usable && v > 0.0 && std::isfinite(v);
        if (usable)
            for (std::size_t i = 0; i < f_count; ++i) sigma[i] = std::sqrt((*var)[i]);
        // otherwise keep unit weights (noise-free estimates carry zero variance)
    }

    std::vector<double> omega(f_count);
    for (std::size_t i = 0; i < f_count; ++i)
        omega[i] = 2.0 * kPi * static_cast<double>(frf.bins[i]) / static_cast<double>(n_samples);

    auto cost_of = [&](const RationalModel& m) {
        double acc = 0.0;
        for (std::size_t i = 0; i < f_count; ++i) {
            const cdouble r = (frf.g[i] - m.response(omega[i])) / sigma[i];
            acc += std::norm(r);
        }
        return acc / static_cast<double>(f_count);
    };

    // --- Levy initializer: D(w) G_hat - N(w) ~ 0, weighted by 1/sigma ---
    std::vector<double> a_mat(2 * f_count * n_params, 0.0);
    std::vector<double> b_vec(2 * f_count, 0.0);
    for (std::size_t i = 0; i < f_count; ++i) {
        const double w = 1.0 / sigma[i];
        for (std::size_t j = 0; j <= n_num; ++j) {
            const cdouble basis = std::polar(w, -omega[i] * static_cast<double>(j));
            a_mat[(2 * i) * n_params + j] = basis.real();
            a_mat[(2 * i + 1) * n_params + j] = basis.imag();
        }
        for (std::size_t j = 1; j <= n_den; ++j) {
            const cdouble basis = -frf.g[i] * std::polar(w, -omega[i] * static_cast<double>(j));
            a_mat[(2 * i) * n_params + n_num + j] = basis.real();
            a_mat[(2 * i + 1) * n_params + n_num + j] = basis.imag();
        }
        const cdouble rhs = frf.g[i] * w;
        b_vec[2 * i] = rhs.real();
        b_vec[2 * i + 1] = rhs.imag();
    }
    auto init = detail::solve_least_squares(std::move(a_mat), std::move(b_vec), 2 * f_count, n_params);

    RationalModel model;
    model.numerator.assign(init.x.begin(), init.x.begin() + n_num + 1);
    model.denominator.assign(n_den + 1, 0.0);
    model.denominator[0] = 1.0;
    for (std::size_t j = 1; j <= n_den; ++j) model.denominator[j] = init.x[n_num + j];

    // --- damped Gauss-Newton on the true weighted output-error cost ---
    double cost = cost_of(model);
    std::size_t iterations = 0;
    std::vector<double> jac(2 * f_count * n_params);
    std::vector<double> res(2 * f_count);
    for (; iterations < options.max_iterations && cost > 1e-28; ++iterations) {
        for (std::size_t i = 0; i < f_count; ++i) {
            const cdouble zinv = std::polar(1.0, -omega[i]);
            cdouble den(0.0, 0.0);
            for (std::size_t j = model.denominator.size(); j-- > 0;)
                den = den * zinv + model.denominator[j];
            const cdouble g = model.response(omega[i]);
            const double w = 1.0 / sigma[i];
            const cdouble r = (frf.g[i] - g) * w;
            res[2 * i] = r.real();
            res[2 * i + 1] = r.imag();
            for (std::size_t j = 0; j <= n_num; ++j) {
                const cdouble d = std::polar(1.0, -omega[i] * static_cast<double>(j)) / den * w;
                jac[(2 * i) * n_params + j] = d.real();
                jac[(2 * i + 1) * n_params + j] = d.imag();
            }
            for (std::size_t j = 1; j <= n_den; ++j) {
                const cdouble d = -g * std::polar(1.0, -omega[i] * static_cast<double>(j)) / den * w;
                jac[(2 * i) * n_params + n_num + j] = d.real();
                jac[(2 * i + 1) * n_params + n_num + j] = d.imag();
            }
        }
        auto step = detail::solve_least_squares(jac, res, 2 * f_count, n_params);
        if (!step.deficient_columns.empty()) {
            std::string names;
            for (std::size_t c : step.deficient_columns) {
                if (!names.empty()) names += ", ";
                names += detail::parameter_name(c, n_num);
            }
            throw Error(ErrorCategory::numeric, "fit_frf: rank-deficient Jacobian in directions: " + names);
        }

        double lambda = 1.0;
        bool accepted = false;
        RationalModel trial = model;
        for (int halving = 0; halving < 30; ++halving) {
            for (std::size_t j = 0; j <= n_num; ++j)
                trial.numerator[j] = model.numerator[j] + lambda * step.x[j];
            for (std::size_t j = 1; j <= n_den; ++j)
                trial.denominator[j] = model.denominator[j] + lambda * step.x[n_num + j];
            const double trial_cost = cost_of(trial);
            if (std::isfinite(trial_cost) && trial_cost < cost) {
                accepted = true;
                const double improvement = (cost - trial_cost) / std::max(cost, 1e-300);
                model = trial;
                cost = trial_cost;
                if (improvement < options.relative_cost_tolerance) {
                    ++iterations;
                    goto converged;
                }
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;  // no damped step improves the cost: at a minimum
    }
converged:

    FitResult result;
    result.model = model;
    result.final_cost = cost;
    result.iterations = iterations;
    result.bins = frf.bins;
    result.weighted_residuals.reserve(f_count);
    for (std::size_t i = 0; i < f_count; ++i)
        result.weighted_residuals.push_back(std::abs(frf.g[i] - model.response(omega[i])) / sigma[i]);

    // linear-theory covariance (J^T J)^{-1} / 2 at the optimum; the attached
    // flag stays false because the theory assumes input-independent noise
    std::vector<double> jtj(n_params * n_params, 0.0);
    for (std::size_t i = 0; i < f_count; ++i) {
        const cdouble zinv = std::polar(1.0, -omega[i]);
        cdouble den(0.0, 0.0);
        for (std::size_t j = model.denominator.size(); j-- > 0;)
            den = den * zinv + model.denominator[j];
        const cdouble g = model.response(omega[i]);
        const double w = 1.0 / sigma[i];
        std::vector<cdouble> grad(n_params);
        for (std::size_t j = 0; j <= n_num; ++j)
            grad[j] = std::polar(1.0, -omega[i] * static_cast<double>(j)) / den * w;
        for (std::size_t j = 1; j <= n_den; ++j)
            grad[n_num + j] = -g * std::polar(1.0, -omega[i] * static_cast<double>(j)) / den * w;
        for (std::size_t r = 0; r < n_params; ++r)
            for (std::size_t c = 0; c < n_params; ++c)
                jtj[r * n_params + c] += grad[r].real() * grad[c].real() + grad[r].imag() * grad[c].imag();
    }
    auto inv = detail::invert_spd(std::move(jtj), n_params);
    if (!inv.empty())
        for (auto& v : inv) v *= 0.5;
    result.linear_theory_covariance = std::move(inv);
    return result;
}

}  // namespace fdsi
