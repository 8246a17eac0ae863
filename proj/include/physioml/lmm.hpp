#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/signal.hpp"
#include "physioml/stats.hpp"

namespace physioml {

struct LmmOptions {
    bool reml = true;
    double log_lambda_lo = -12.0;
    double log_lambda_hi = 12.0;
};

/// Random-intercept Gaussian mixed model
///   y = b0 + X b + u_g + e,  u_g ~ N(0, sigma_b2),  e ~ N(0, sigma_e2),
/// fitted by profiling the (restricted) likelihood over the variance ratio
/// lambda = sigma_b2 / sigma_e2.
struct LmmFit {
    std::vector<double> beta;  // intercept first, then one slope per column
    std::vector<double> se;
    std::vector<double> p_values;  // two-tailed normal Wald
    double sigma_b2 = 0.0;
    double sigma_e2 = 0.0;
    double lambda = 0.0;
    double r2_marginal = 0.0;
    double r2_conditional = 0.0;
    bool converged = false;
    double log_likelihood = 0.0;  // restricted log-likelihood at the optimum
};

namespace detail {

/// Cholesky factorization of a symmetric positive definite matrix stored
/// row-major. Returns false when a pivot collapses (rank deficiency).
inline bool cholesky(std::vector<double>& a, std::size_t p) {
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
        if (!(d > 1e-12 * std::max(1.0, std::fabs(a[j * p + j])))) return false;
        const double l = std::sqrt(d);
        a[j * p + j] = l;
        for (std::size_t i = j + 1; i < p; ++i) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            a[i * p + j] = s / l;
        }
    }
    return true;
}

inline void chol_solve(const std::vector<double>& l, std::size_t p, std::vector<double>& x) {
    for (std::size_t i = 0; i < p; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * x[k];
        x[i] = s / l[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= l[k * p + ii] * x[k];
        x[ii] = s / l[ii * p + ii];
    }
}

inline double chol_log_det(const std::vector<double>& l, std::size_t p) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) acc += std::log(l[j * p + j]);
    return 2.0 * acc;
}

/// Inverse from the Cholesky factor (needed only for standard errors).
inline std::vector<double> chol_inverse(const std::vector<double>& l, std::size_t p) {
    std::vector<double> inv(p * p, 0.0);
    std::vector<double> e(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        chol_solve(l, p, e);
        for (std::size_t i = 0; i < p; ++i) inv[i * p + j] = e[i];
    }
    return inv;
}

struct GroupSlices {
    std::vector<std::vector<std::size_t>> members;
};

inline GroupSlices group_indices(std::span<const std::string> groups) {
    std::map<std::string, std::size_t> ids;
    GroupSlices out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto [it, inserted] = ids.try_emplace(groups[i], out.members.size());
        if (inserted) out.members.emplace_back();
        out.members[it->second].push_back(i);
    }
    return out;
}

/// GLS normal equations and REML pieces for a given lambda. The design is
/// W = [1, X]; group structure enters through c_g = lambda / (1 + lambda n_g).
struct ProfileState {
    std::size_t n = 0, p = 0;
    const std::vector<std::vector<double>>* x = nullptr;
    std::span<const double> y;
    const GroupSlices* slices = nullptr;
    bool reml = true;

    double w_at(std::size_t row, std::size_t col) const {
        return col == 0 ? 1.0 : (*x)[row][col - 1];
    }

    struct Solution {
        std::vector<double> beta;
        std::vector<double> chol;  // factor of the normal matrix A(lambda)
        double rss = 0.0;
        double log_det_a = 0.0;
        double log_det_v_unit = 0.0;  // sum_g log(1 + lambda n_g)
        double sigma_e2 = 0.0;
        double criterion = 0.0;  // -2 log (restricted) likelihood, constant dropped
    };

    Solution solve(double lambda) const {
        Solution sol;
        std::vector<double> a(p * p, 0.0);
        std::vector<double> b(p, 0.0);
        for (const auto& g : slices->members) {
            const double ng = static_cast<double>(g.size());
            const double cg = lambda / (1.0 + lambda * ng);
            sol.log_det_v_unit += std::log1p(lambda * ng);
            std::vector<double> wsum(p, 0.0);
            double ysum = 0.0;
            for (std::size_t i : g) {
                for (std::size_t c = 0; c < p; ++c) {
                    const double wic = w_at(i, c);
                    wsum[c] += wic;
                    b[c] += wic * y[i];
                    for (std::size_t c2 = 0; c2 <= c; ++c2) a[c * p + c2] += wic * w_at(i, c2);
                }
                ysum += y[i];
            }
            for (std::size_t c = 0; c < p; ++c) {
                b[c] -= cg * wsum[c] * ysum;
                for (std::size_t c2 = 0; c2 <= c; ++c2) a[c * p + c2] -= cg * wsum[c] * wsum[c2];
            }
        }
        for (std::size_t c = 0; c < p; ++c) {
            for (std::size_t c2 = c + 1; c2 < p; ++c2) a[c * p + c2] = a[c2 * p + c];
        }

        sol.chol = a;
        if (!cholesky(sol.chol, p)) {
            throw Error(Errc::rank_deficient, "design matrix is rank deficient");
        }
        sol.log_det_a = chol_log_det(sol.chol, p);
        sol.beta = b;
        chol_solve(sol.chol, p, sol.beta);

        for (const auto& g : slices->members) {
            const double ng = static_cast<double>(g.size());
            const double cg = lambda / (1.0 + lambda * ng);
            double esum = 0.0;
            for (std::size_t i : g) {
                double e = y[i];
                for (std::size_t c = 0; c < p; ++c) e -= w_at(i, c) * sol.beta[c];
                sol.rss += e * e;
                esum += e;
            }
            sol.rss -= cg * esum * esum;
        }
        const double dof = static_cast<double>(n) - (reml ? static_cast<double>(p) : 0.0);
        sol.sigma_e2 = std::max(sol.rss / dof, 1e-300);
        sol.criterion = dof * std::log(sol.sigma_e2) + sol.log_det_v_unit;
        if (reml) sol.criterion += sol.log_det_a;
        return sol;
    }
};

}  // namespace detail

/// Fits the random-intercept model by REML (or ML): a coarse grid over
/// log lambda in [-12, 12] brackets the optimum, golden-section refines it,
/// and the exact lambda = 0 boundary competes as a candidate so the no-group
/// -effect case reduces to OLS.
inline LmmFit fit_lmm(const std::vector<std::vector<double>>& x, std::span<const double> y,
                      std::span<const std::string> groups, const LmmOptions& options = {}) {
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n || groups.size() != n) {
        throw Error(Errc::length_mismatch, "X, y, and groups must have equal length");
    }
    const std::size_t k = x[0].size();
    const std::size_t p = k + 1;
    if (n <= p) throw Error(Errc::too_few_samples, "need more observations than coefficients");
    const auto slices = detail::group_indices(groups);
    if (slices.members.size() < 2) throw Error(Errc::too_few_groups, "need at least 2 groups");

    detail::ProfileState state;
    state.n = n;
    state.p = p;
    state.x = &x;
    state.y = y;
    state.slices = &slices;
    state.reml = options.reml;

    // Coarse bracket over log lambda, then golden-section refinement.
    const int grid_points = 49;
    double best_log = options.log_lambda_lo;
    double best_crit = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double ll = options.log_lambda_lo +
                          (options.log_lambda_hi - options.log_lambda_lo) * i / (grid_points - 1.0);
        const double crit = state.solve(std::exp(ll)).criterion;
        if (i == 0 || crit < best_crit) {
            best_crit = crit;
            best_log = ll;
        }
    }
    const double step = (options.log_lambda_hi - options.log_lambda_lo) / (grid_points - 1.0);
    double lo = std::max(options.log_lambda_lo, best_log - step);
    double hi = std::min(options.log_lambda_hi, best_log + step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = state.solve(std::exp(x1)).criterion;
    double f2 = state.solve(std::exp(x2)).criterion;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        if (hi - lo < 1e-9) {
            converged = true;
            break;
        }
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = state.solve(std::exp(x1)).criterion;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = state.solve(std::exp(x2)).criterion;
        }
    }
    double lambda = std::exp(0.5 * (lo + hi));
    auto sol = state.solve(lambda);

    // The boundary lambda = 0 (no group variance) competes exactly.
    const auto sol0 = state.solve(0.0);
    if (sol0.criterion <= sol.criterion) {
        lambda = 0.0;
        sol = sol0;
    }

    LmmFit fit;
    fit.lambda = lambda;
    fit.converged = converged;
    fit.beta = sol.beta;
    fit.sigma_e2 = sol.sigma_e2;
    fit.sigma_b2 = lambda * sol.sigma_e2;
    const double pi2 = 6.283185307179586476925286766559;
    const double dof = static_cast<double>(n) - (options.reml ? static_cast<double>(p) : 0.0);
    fit.log_likelihood = -0.5 * (sol.criterion + dof * std::log(pi2) + dof);

    const auto inv = detail::chol_inverse(sol.chol, p);
    fit.se.resize(p);
    fit.p_values.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        fit.se[j] = std::sqrt(std::max(0.0, fit.sigma_e2 * inv[j * p + j]));
        fit.p_values[j] = fit.se[j] > 0.0 ? normal_two_tailed_p(fit.beta[j] / fit.se[j]) : 1.0;
    }

    // Nakagawa-Schielzeth R^2 from the fitted pieces.
    std::vector<double> fixed_pred(n);
    for (std::size_t i = 0; i < n; ++i) {
        double f = fit.beta[0];
        for (std::size_t c = 0; c < k; ++c) f += x[i][c] * fit.beta[c + 1];
        fixed_pred[i] = f;
    }
    const double var_f = n > 1 ? sample_variance(fixed_pred) : 0.0;
    const double denom = var_f + fit.sigma_b2 + fit.sigma_e2;
    fit.r2_marginal = denom > 0.0 ? var_f / denom : 0.0;
    fit.r2_conditional = denom > 0.0 ? (var_f + fit.sigma_b2) / denom : 0.0;
    return fit;
}

/// Variance explained by fixed effects alone (marginal) and together with
/// the random intercept (conditional).
inline std::pair<double, double> r2_nakagawa(const LmmFit& fit, const std::vector<std::vector<double>>& x) {
    if (!fit.converged) throw Error(Errc::not_converged, "fit did not converge");
    std::vector<double> fixed_pred(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = fit.beta[0];
        for (std::size_t c = 0; c + 1 < fit.beta.size(); ++c) f += x[i][c] * fit.beta[c + 1];
        fixed_pred[i] = f;
    }
    const double var_f = x.size() > 1 ? sample_variance(fixed_pred) : 0.0;
    const double denom = var_f + fit.sigma_b2 + fit.sigma_e2;
    return {denom > 0.0 ? var_f / denom : 0.0, denom > 0.0 ? (var_f + fit.sigma_b2) / denom : 0.0};
}

/// Strict p < alpha rule; the boundary is never flagged.
inline std::vector<bool> significance_flags(std::span<const double> p_values, double alpha = 0.1) {
    std::vector<bool> flags(p_values.size());
    for (std::size_t i = 0; i < p_values.size(); ++i) {
        if (p_values[i] < 0.0 || p_values[i] > 1.0) {
            throw Error(Errc::invalid_config, "p-values must lie in [0, 1]");
        }
        flags[i] = p_values[i] < alpha;
    }
    return flags;
}

/// Regression report: one row per feature, a (Coef, p-value) column pair per
/// corpus, R-squared (conditional/marginal) in the header, and an asterisk
/// on p-values below 0.1.
inline std::string render_lmm_report(std::span<const std::string> corpus_names,
                                     std::span<const LmmFit> fits) {
    if (fits.empty() || corpus_names.size() != fits.size()) {
        throw Error(Errc::invalid_config, "need one fit per corpus");
    }
    static constexpr std::array<const char*, 16> row_labels = {
        "BPM",      "RMSSD",      "SDNN",     "HF_RR",    "LF_RR",   "LF/HF ratio",
        "Mean SCL", "SCR rate",   "ECG mean", "ECG median",
        "ECG std",  "ECG var",    "EDA mean", "EDA median", "EDA std", "EDA var"};
    const int name_w = 12;
    const int cell_w = 11;
    std::ostringstream out;
    char buf[96];

    std::snprintf(buf, sizeof(buf), "%-*s", name_w, "");
    out << buf;
    for (std::size_t ci = 0; ci < fits.size(); ++ci) {
        std::snprintf(buf, sizeof(buf), " | %-*s", 2 * cell_w + 1, corpus_names[ci].c_str());
        out << buf;
    }
    out << "\n";
    std::snprintf(buf, sizeof(buf), "%-*s", name_w, "");
    out << buf;
    for (const auto& fit : fits) {
        char r2[64];
        std::snprintf(r2, sizeof(r2), "R2: %.3f/%.3f", fit.r2_conditional, fit.r2_marginal);
        std::snprintf(buf, sizeof(buf), " | %-*s", 2 * cell_w + 1, r2);
        out << buf;
    }
    out << "\n";
    std::snprintf(buf, sizeof(buf), "%-*s", name_w, "Feature");
    out << buf;
    for (std::size_t ci = 0; ci < fits.size(); ++ci) {
        std::snprintf(buf, sizeof(buf), " | %-*s %-*s", cell_w, "Coef", cell_w, "p-value");
        out << buf;
    }
    out << "\n";
    out << std::string(name_w, '-');
    for (std::size_t ci = 0; ci < fits.size(); ++ci) out << "-+-" << std::string(2 * cell_w + 1, '-');
    out << "\n";

    for (std::size_t row = 0; row < row_labels.size(); ++row) {
        std::snprintf(buf, sizeof(buf), "%-*s", name_w, row_labels[row]);
        out << buf;
        for (const auto& fit : fits) {
            if (fit.beta.size() != 17) {
                throw Error(Errc::invalid_config, "report expects 16-feature fits");
            }
            const double coef = fit.beta[row + 1];
            const double p = fit.p_values[row + 1];
            char coef_s[32], p_s[32];
            std::snprintf(coef_s, sizeof(coef_s), "%.3f", coef);
            std::snprintf(p_s, sizeof(p_s), "%.3g%s", p, p < 0.1 ? "*" : "");
            std::snprintf(buf, sizeof(buf), " | %-*s %-*s", cell_w, coef_s, cell_w, p_s);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace physioml
