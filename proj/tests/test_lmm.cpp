#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "physioml/lmm.hpp"
#include "physioml/rng.hpp"

using namespace physioml;

namespace {

struct Generated {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::vector<std::string> groups;
};

/// y = x * beta + u_g + e with standard-normal features.
Generated generate(std::size_t n, std::size_t k, std::size_t n_groups,
                   std::span<const double> beta, double intercept, double sigma_b,
                   double sigma_e, std::uint64_t seed) {
    Rng rng(seed);
    Generated g;
    g.x.assign(n, std::vector<double>(k));
    g.y.assign(n, 0.0);
    g.groups.resize(n);
    std::vector<double> u(n_groups);
    for (auto& v : u) v = sigma_b * rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = i % n_groups;
        g.groups[i] = "g" + std::to_string(gi);
        double mean = intercept + u[gi];
        for (std::size_t c = 0; c < k; ++c) {
            g.x[i][c] = rng.normal();
            mean += beta[c] * g.x[i][c];
        }
        g.y[i] = mean + sigma_e * rng.normal();
    }
    return g;
}

/// Independent OLS oracle via normal equations and naive Gaussian
/// elimination.
std::vector<double> ols(const std::vector<std::vector<double>>& x, std::span<const double> y) {
    const std::size_t n = x.size(), k = x[0].size(), p = k + 1;
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> w(p);
        w[0] = 1.0;
        for (std::size_t c = 0; c < k; ++c) w[c + 1] = x[i][c];
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = 0; c < p; ++c) a[r][c] += w[r] * w[c];
            a[r][p] += w[r] * y[i];
        }
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t r = 0; r < p; ++r) beta[r] = a[r][p] / a[r][r];
    return beta;
}

}  // namespace

TEST_CASE("zero group variance reduces the fit to OLS", "[lmm]") {
    const std::vector<double> beta = {0.5, -0.3, 0.0, 0.8};
    const auto g = generate(400, beta.size(), 20, beta, 1.0, 0.0, 0.3, 11);
    const auto fit = fit_lmm(g.x, g.y, g.groups);
    const auto oracle = ols(g.x, g.y);
    REQUIRE(fit.sigma_b2 < 1e-6);
    for (std::size_t j = 0; j < oracle.size(); ++j) {
        REQUIRE(fit.beta[j] == Catch::Approx(oracle[j]).margin(1e-6));
    }
}

TEST_CASE("duplicated feature columns are rejected as rank deficient", "[lmm]") {
    auto g = generate(100, 3, 10, std::vector<double>{0.1, 0.2, 0.3}, 0.0, 0.2, 0.3, 5);
    for (auto& row : g.x) row[2] = row[1];
    try {
        fit_lmm(g.x, g.y, g.groups);
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::rank_deficient);
    }
}

TEST_CASE("planted fixed effects are recovered within three standard errors", "[lmm]") {
    const std::vector<double> beta = {0.3, 0.0, 0.0, 0.0, 0.0};
    const auto g = generate(2000, beta.size(), 50, beta, 0.5, std::sqrt(0.1), std::sqrt(0.2), 21);
    const auto fit = fit_lmm(g.x, g.y, g.groups);
    REQUIRE(std::fabs(fit.beta[1] - 0.3) <= 3.0 * fit.se[1]);
    REQUIRE(fit.sigma_b2 == Catch::Approx(0.1).margin(0.06));
    REQUIRE(fit.sigma_e2 == Catch::Approx(0.2).margin(0.03));
    REQUIRE(fit.converged);
}

TEST_CASE("fit is equivariant under group relabeling", "[lmm]") {
    const std::vector<double> beta = {0.4, -0.2};
    auto g = generate(300, beta.size(), 15, beta, 0.2, 0.3, 0.4, 31);
    const auto fit1 = fit_lmm(g.x, g.y, g.groups);
    for (auto& id : g.groups) id = "renamed_" + id + "_x";
    const auto fit2 = fit_lmm(g.x, g.y, g.groups);
    REQUIRE(fit1.beta == fit2.beta);
    REQUIRE(fit1.sigma_b2 == fit2.sigma_b2);
    REQUIRE(fit1.sigma_e2 == fit2.sigma_e2);
}

TEST_CASE("adding a constant to y shifts only the intercept", "[lmm]") {
    const std::vector<double> beta = {0.4, -0.2, 0.1};
    auto g = generate(300, beta.size(), 15, beta, 0.2, 0.3, 0.4, 41);
    const auto fit1 = fit_lmm(g.x, g.y, g.groups);
    const double shift = 7.25;
    for (auto& v : g.y) v += shift;
    const auto fit2 = fit_lmm(g.x, g.y, g.groups);
    REQUIRE(fit2.beta[0] == Catch::Approx(fit1.beta[0] + shift).margin(1e-9));
    for (std::size_t j = 1; j < fit1.beta.size(); ++j) {
        REQUIRE(fit2.beta[j] == Catch::Approx(fit1.beta[j]).margin(1e-9));
    }
    REQUIRE(fit2.sigma_b2 == Catch::Approx(fit1.sigma_b2).margin(1e-9));
}

TEST_CASE("the returned lambda beats a 64-point grid", "[lmm]") {
    const std::vector<double> beta = {0.3, -0.1};
    const auto g = generate(500, beta.size(), 25, beta, 0.1, 0.4, 0.5, 51);
    const auto fit = fit_lmm(g.x, g.y, g.groups);

    // Recompute the profiled REML criterion through the public fit: compare
    // the restricted log-likelihood at the optimum against a lambda grid.
    LmmOptions opt;
    const auto crit_at = [&](double lambda) {
        // Fit with a degenerate bracket pinned at this lambda.
        LmmOptions o;
        o.log_lambda_lo = std::log(lambda);
        o.log_lambda_hi = std::log(lambda);
        return fit_lmm(g.x, g.y, g.groups, o).log_likelihood;
    };
    for (int i = 0; i < 64; ++i) {
        const double ll = -12.0 + 24.0 * i / 63.0;
        REQUIRE(fit.log_likelihood >= crit_at(std::exp(ll)) - 1e-6);
    }
}

TEST_CASE("conditional R2 dominates marginal R2", "[lmm]") {
    for (std::uint64_t seed : {3u, 4u, 5u, 6u}) {
        const std::vector<double> beta = {0.5, 0.2};
        const auto g = generate(300, beta.size(), 12, beta, 0.0, 0.4, 0.5, seed);
        const auto fit = fit_lmm(g.x, g.y, g.groups);
        REQUIRE(fit.r2_conditional >= fit.r2_marginal);
        const auto [marg, cond] = r2_nakagawa(fit, g.x);
        REQUIRE(marg == Catch::Approx(fit.r2_marginal));
        REQUIRE(cond == Catch::Approx(fit.r2_conditional));
    }
}

TEST_CASE("R2 identities in degenerate cases", "[lmm]") {
    // A fit that lands on the sigma_b2 = 0 boundary: conditional equals
    // marginal exactly.
    const std::vector<double> beta = {0.5, -0.3, 0.0, 0.8};
    const auto g = generate(400, beta.size(), 20, beta, 1.0, 0.0, 0.3, 11);
    const auto fit = fit_lmm(g.x, g.y, g.groups);
    REQUIRE(fit.sigma_b2 < 1e-6);
    REQUIRE(fit.r2_conditional == Catch::Approx(fit.r2_marginal).margin(1e-6));

    // Pure noise: marginal near zero.
    const std::vector<double> zero = {0.0, 0.0};
    const auto g0 = generate(400, zero.size(), 20, zero, 0.0, 0.0, 0.5, 71);
    const auto fit0 = fit_lmm(g0.x, g0.y, g0.groups);
    REQUIRE(fit0.r2_marginal < 0.05);
}

TEST_CASE("planted variance components give R2 near analytic values", "[lmm]") {
    // var_f = 0.3^2 (one unit-variance feature), sigma_b2 = 0.1,
    // sigma_e2 = 0.2: marginal = 0.09/0.39, conditional = 0.19/0.39.
    const std::vector<double> beta = {0.3};
    const auto g = generate(3000, beta.size(), 60, beta, 0.0, std::sqrt(0.1), std::sqrt(0.2), 81);
    const auto fit = fit_lmm(g.x, g.y, g.groups);
    REQUIRE(fit.r2_marginal == Catch::Approx(0.09 / 0.39).margin(0.05));
    REQUIRE(fit.r2_conditional == Catch::Approx(0.19 / 0.39).margin(0.05));
}

TEST_CASE("significance flags follow the strict 0.1 rule", "[lmm]") {
    const std::vector<double> p = {0.05, 0.1, 0.99, 0.0999999};
    const auto flags = significance_flags(p);
    REQUIRE(flags == std::vector<bool>{true, false, false, true});
    REQUIRE_THROWS_AS(significance_flags(std::vector<double>{1.5}), Error);
}

TEST_CASE("group sanity errors", "[lmm]") {
    const std::vector<double> beta = {0.3};
    auto g = generate(100, beta.size(), 10, beta, 0.0, 0.2, 0.3, 91);
    std::fill(g.groups.begin(), g.groups.end(), "only");
    REQUIRE_THROWS_AS(fit_lmm(g.x, g.y, g.groups), Error);
}

TEST_CASE("the regression report renders 16 rows with asterisks", "[lmm]") {
    Rng rng(220);
    const std::size_t n = 600, k = 16;
    std::vector<std::vector<double>> x(n, std::vector<double>(k));
    std::vector<double> y(n);
    std::vector<std::string> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
        groups[i] = "g" + std::to_string(i % 12);
        for (auto& v : x[i]) v = rng.normal();
        y[i] = 0.8 * x[i][0] + 0.3 * rng.normal();  // strong BPM effect
    }
    const auto fit = fit_lmm(x, y, groups);
    const std::vector<std::string> names = {"demo"};
    const std::vector<LmmFit> fits = {fit};
    const std::string report = render_lmm_report(names, fits);
    REQUIRE(report.find("BPM") != std::string::npos);
    REQUIRE(report.find("EDA var") != std::string::npos);
    REQUIRE(report.find("R2:") != std::string::npos);
    REQUIRE(report.find('*') != std::string::npos);
    // BPM row should be flagged significant.
    const auto bpm_line_start = report.find("BPM");
    const auto bpm_line = report.substr(bpm_line_start, report.find('\n', bpm_line_start) - bpm_line_start);
    REQUIRE(bpm_line.find('*') != std::string::npos);
}
