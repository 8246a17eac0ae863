#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "physioml/error.hpp"

namespace physioml {

struct SvmParams {
    double c = 1.0;
    double gamma = 0.1;
    double tol = 1e-3;
    std::size_t max_passes = 200000;
};

/// C-SVC with an RBF kernel, trained by SMO on the dual, plus Platt
/// coefficients fitted on the training decision values.
struct SvmModel {
    double gamma = 0.1;
    double rho = 0.0;  // decision(x) = sum coef_s K(sv_s, x) - rho
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> coef;  // alpha_s * y_s
    double platt_a = -1.0;
    double platt_b = 0.0;

    double decision(std::span<const double> x) const {
        double f = 0.0;
        for (std::size_t s = 0; s < support_vectors.size(); ++s) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double d = support_vectors[s][j] - x[j];
                d2 += d * d;
            }
            f += coef[s] * std::exp(-gamma * d2);
        }
        return f - rho;
    }

    double predict_proba(std::span<const double> x) const {
        const double f = platt_a * decision(x) + platt_b;
        // Numerically safe logistic.
        if (f >= 0.0) return std::exp(-f) / (1.0 + std::exp(-f));
        return 1.0 / (1.0 + std::exp(f));
    }
};

namespace detail {

/// Platt sigmoid fit: minimizes the cross-entropy of
/// p = 1/(1 + exp(A f + B)) against smoothed targets with Newton steps and
/// backtracking (Lin-Weng style).
inline std::pair<double, double> fit_platt(std::span<const double> decisions, std::span<const int> labels) {
    const std::size_t n = decisions.size();
    double prior1 = 0.0;
    for (int y : labels) prior1 += (y == 1);
    const double prior0 = static_cast<double>(n) - prior1;
    const double hi_t = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo_t = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] == 1 ? hi_t : lo_t;

    double a = 0.0;
    double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    auto objective = [&](double av, double bv) {
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = av * decisions[i] + bv;
            // t*f + log(1 + exp(-f)) in a stable form
            if (f >= 0.0) {
                obj += t[i] * f + std::log1p(std::exp(-f));
            } else {
                obj += (t[i] - 1.0) * f + std::log1p(std::exp(f));
            }
        }
        return obj;
    };

    const double min_step = 1e-10, sigma = 1e-12;
    double fval = objective(a, b);
    for (int it = 0; it < 100; ++it) {
        double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = a * decisions[i] + b;
            double p, q;
            if (f >= 0.0) {
                p = std::exp(-f) / (1.0 + std::exp(-f));
                q = 1.0 / (1.0 + std::exp(-f));
            } else {
                p = 1.0 / (1.0 + std::exp(f));
                q = std::exp(f) / (1.0 + std::exp(f));
            }
            const double d2 = p * q;
            h11 += decisions[i] * decisions[i] * d2;
            h22 += d2;
            h21 += decisions[i] * d2;
            const double d1 = t[i] - p;
            g1 += decisions[i] * d1;
            g2 += d1;
        }
        if (std::fabs(g1) < 1e-5 && std::fabs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= min_step) {
            const double trial = objective(a + step * da, b + step * db);
            if (trial < fval + 1e-4 * step * gd) {
                a += step * da;
                b += step * db;
                fval = trial;
                break;
            }
            step *= 0.5;
        }
        if (step < min_step) break;
    }
    return {a, b};
}

}  // namespace detail

/// SMO with maximal-violating-pair selection. labels must be +-1.
inline SvmModel train_svm(const std::vector<std::vector<double>>& x, std::span<const int> labels01,
                          const SvmParams& params) {
    const std::size_t n = x.size();
    if (n < 2) throw Error(Errc::too_few_samples, "SVM needs at least 2 samples");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels01[i] == 1 ? 1.0 : -1.0;

    // Full kernel matrix; training sets here are small.
    std::vector<double> kmat(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double d2 = 0.0;
            for (std::size_t f = 0; f < x[i].size(); ++f) {
                const double d = x[i][f] - x[j][f];
                d2 += d * d;
            }
            const double k = std::exp(-params.gamma * d2);
            kmat[i * n + j] = k;
            kmat[j * n + i] = k;
        }
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> fcache(n, 0.0);  // f_i = sum alpha_s y_s K_si (no bias)
    const double c = params.c;

    double m_up = 0.0, m_low = 0.0;
    std::size_t i_up = 0, i_low = 0;
    auto select_pair = [&]() {
        m_up = -1e300;
        m_low = 1e300;
        i_up = n;
        i_low = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double e = fcache[t] - y[t];
            const bool in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            const bool in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if (in_up && -e > m_up) {
                m_up = -e;
                i_up = t;
            }
            if (in_low && -e < m_low) {
                m_low = -e;
                i_low = t;
            }
        }
    };

    for (std::size_t pass = 0; pass < params.max_passes; ++pass) {
        select_pair();
        if (i_up >= n || i_low >= n || m_up - m_low < params.tol) break;
        const std::size_t i = i_up, j = i_low;
        const double s = y[i] * y[j];
        double lo, hi;
        if (y[i] != y[j]) {
            lo = std::max(0.0, alpha[j] - alpha[i]);
            hi = std::min(c, c + alpha[j] - alpha[i]);
        } else {
            lo = std::max(0.0, alpha[i] + alpha[j] - c);
            hi = std::min(c, alpha[i] + alpha[j]);
        }
        double eta = kmat[i * n + i] + kmat[j * n + j] - 2.0 * kmat[i * n + j];
        if (eta < 1e-12) eta = 1e-12;
        const double ei = fcache[i] - y[i];
        const double ej = fcache[j] - y[j];
        double aj = alpha[j] + y[j] * (ei - ej) / eta;
        aj = std::clamp(aj, lo, hi);
        if (std::fabs(aj - alpha[j]) < 1e-14) break;  // no progress on the worst pair
        const double ai = alpha[i] + s * (alpha[j] - aj);
        const double di = (ai - alpha[i]) * y[i];
        const double dj = (aj - alpha[j]) * y[j];
        alpha[i] = ai;
        alpha[j] = aj;
        for (std::size_t t = 0; t < n; ++t) {
            fcache[t] += di * kmat[i * n + t] + dj * kmat[j * n + t];
        }
    }

    // rho from free support vectors, midpoint of the violating bounds
    // otherwise.
    double rho_sum = 0.0;
    std::size_t rho_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 1e-12 && alpha[t] < c - 1e-12) {
            rho_sum += fcache[t] - y[t];
            ++rho_count;
        }
    }
    SvmModel model;
    model.gamma = params.gamma;
    select_pair();
    model.rho = rho_count > 0 ? rho_sum / static_cast<double>(rho_count) : -0.5 * (m_up + m_low);

    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 1e-12) {
            model.support_vectors.push_back(x[t]);
            model.coef.push_back(alpha[t] * y[t]);
        }
    }

    // Platt scaling on the training decision values.
    std::vector<double> dec(n);
    std::vector<int> lab(n);
    for (std::size_t t = 0; t < n; ++t) {
        dec[t] = fcache[t] - model.rho;
        lab[t] = labels01[t];
    }
    const auto [pa, pb] = detail::fit_platt(dec, lab);
    model.platt_a = pa;
    model.platt_b = pb;
    return model;
}

}  // namespace physioml
