#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spivar/aparch.hpp"

using Catch::Approx;
using spivar::AparchParams;

namespace {

const AparchParams kRef{0.0058, 0.0166, 0.0586, 0.9493, 0.2043, 1.1946, 0.4748, 5.6275};

}  // namespace

TEST_CASE("filter matches a hand-rolled recursion", "[aparch]") {
    const std::vector<double> r = {1.0, -2.0, 0.5, 3.0, -1.0};
    const auto st = spivar::aparch_filter(kRef, r);

    // Independent spreadsheet-style recursion.
    const double mu = 0.0058, omega = 0.0166, alpha = 0.0586, beta = 0.9493;
    const double gamma = 0.2043, delta = 1.1946;
    std::vector<double> eps(5);
    double news_mean = 0.0, sq_mean = 0.0;
    for (int t = 0; t < 5; ++t) {
        eps[t] = r[t] - mu;
        news_mean += std::pow(std::abs(eps[t]) - gamma * eps[t], delta) / 5.0;
        sq_mean += eps[t] * eps[t] / 5.0;
    }
    double prev_news = news_mean;
    double prev_sd = std::pow(sq_mean, delta / 2.0);
    for (int t = 0; t < 5; ++t) {
        const double sd = omega + alpha * prev_news + beta * prev_sd;
        REQUIRE(st.sigma_delta[t] == Approx(sd).epsilon(1e-12));
        REQUIRE(st.sigma[t] == Approx(std::pow(sd, 1.0 / delta)).epsilon(1e-12));
        REQUIRE(st.residuals[t] == Approx(eps[t]).epsilon(1e-14));
        REQUIRE(st.std_residuals[t] == Approx(eps[t] / std::pow(sd, 1.0 / delta)).epsilon(1e-12));
        prev_news = std::pow(std::abs(eps[t]) - gamma * eps[t], delta);
        prev_sd = sd;
    }
}

TEST_CASE("gamma = 0, delta = 2 collapses to plain GARCH(1,1)", "[aparch]") {
    AparchParams p = kRef;
    p.gamma = 0.0;
    p.delta = 2.0;
    std::vector<double> r;
    std::mt19937_64 gen(11);
    for (int i = 0; i < 400; ++i)
        r.push_back(0.01 + 1.3 * std::normal_distribution<double>()(gen));

    const auto st = spivar::aparch_filter(p, r);
    // Independent squared-return recursion with the sample-mean presample.
    double sq_mean = 0.0;
    for (double x : r) sq_mean += (x - p.mu) * (x - p.mu) / r.size();
    double prev_eps2 = sq_mean, prev_var = sq_mean;
    for (std::size_t t = 0; t < r.size(); ++t) {
        const double var = p.omega + p.alpha * prev_eps2 + p.beta * prev_var;
        REQUIRE(st.sigma_delta[t] == Approx(var).epsilon(1e-12));
        const double eps = r[t] - p.mu;
        prev_eps2 = eps * eps;
        prev_var = var;
    }
}

TEST_CASE("loglik is the sum of innovation log-densities minus the jacobian", "[aparch]") {
    const auto r = spivar::aparch_simulate(kRef, 300, 100, 3);
    const auto st = spivar::aparch_filter(kRef, r);
    const spivar::SpivDist innov(kRef.m, kRef.nu);
    double manual = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t)
        manual += innov.log_pdf(st.std_residuals[t]) - std::log(st.sigma[t]);
    REQUIRE(spivar::aparch_loglik(kRef, r) == Approx(manual).epsilon(1e-12));

    const auto terms = spivar::aparch_loglik_terms(kRef, r);
    double from_terms = 0.0;
    for (double v : terms) from_terms += v;
    REQUIRE(from_terms == Approx(manual).epsilon(1e-12));
}

TEST_CASE("loglik barriers on invalid or explosive parameters", "[aparch]") {
    const auto r = spivar::aparch_simulate(kRef, 200, 50, 4);
    const double neg_inf = -std::numeric_limits<double>::infinity();

    AparchParams p = kRef;
    p.omega = 0.0;
    REQUIRE(spivar::aparch_loglik(p, r) == neg_inf);
    p = kRef;
    p.gamma = 1.0;
    REQUIRE(spivar::aparch_loglik(p, r) == neg_inf);
    p = kRef;
    p.m = 1.9;
    REQUIRE(spivar::aparch_loglik(p, r) == neg_inf);
    p = kRef;  // persistence above one
    p.alpha = 0.2;
    p.beta = 0.9999;
    p.gamma = 0.0;
    p.delta = 2.0;
    REQUIRE(spivar::aparch_loglik(p, r) == neg_inf);
    p = kRef;  // power expectation divergent
    p.delta = 3.9;
    p.m = 3.0;
    REQUIRE(spivar::aparch_loglik(p, r) == neg_inf);
    REQUIRE(std::isfinite(spivar::aparch_loglik(kRef, r)));
}

TEST_CASE("persistence matches the closed-form expectation", "[aparch]") {
    // E[(|Z| - 0.2043 Z)^1.1946] for the reference innovation parameters.
    const double expectation = 0.7651658465;
    REQUIRE(spivar::aparch_persistence(kRef) ==
            Approx(kRef.alpha * expectation + kRef.beta).epsilon(1e-8));

    AparchParams p = kRef;
    p.delta = 3.9;
    p.m = 3.0;
    REQUIRE_THROWS_AS(spivar::aparch_persistence(p), std::domain_error);
}

TEST_CASE("finite-difference gradients agree across step sizes", "[aparch]") {
    const auto r = spivar::aparch_simulate(kRef, 800, 200, 5);
    AparchParams p = kRef;
    p.alpha = 0.09;  // move off the optimum so gradients are nonzero
    p.beta = 0.90;
    const auto theta = p.to_array();
    for (int i = 0; i < AparchParams::kCount; ++i) {
        auto grad_with = [&](double scale) {
            auto up = theta, dn = theta;
            const double h = scale * std::max(1.0, std::abs(theta[i]));
            up[i] += h;
            dn[i] -= h;
            return (spivar::aparch_loglik(AparchParams::from_array(up), r) -
                    spivar::aparch_loglik(AparchParams::from_array(dn), r)) /
                   (2.0 * h);
        };
        const double g1 = grad_with(1e-5);
        const double g2 = grad_with(2.5e-6);
        REQUIRE(std::abs(g1 - g2) <= 1e-4 * std::max(1.0, std::abs(g1)));
    }
}

TEST_CASE("simulation is deterministic and respects its guards", "[aparch]") {
    const auto a = spivar::aparch_simulate(kRef, 250, 100, 9);
    const auto b = spivar::aparch_simulate(kRef, 250, 100, 9);
    const auto c = spivar::aparch_simulate(kRef, 250, 100, 10);
    REQUIRE(a == b);
    REQUIRE(a != c);
    REQUIRE(a.size() == 250);

    AparchParams p = kRef;
    p.alpha = 0.3;
    p.beta = 0.95;
    p.gamma = 0.0;
    p.delta = 2.0;
    REQUIRE_THROWS_AS(spivar::aparch_simulate(p, 10, 0, 1), std::domain_error);
}

TEST_CASE("fit recovers simulation parameters", "[aparch][slow]") {
    const auto r = spivar::aparch_simulate(kRef, 3000, 500, 1);
    const auto fit = spivar::aparch_fit(r);

    REQUIRE(fit.converged);
    REQUIRE(std::isfinite(fit.loglik));
    REQUIRE(fit.loglik >= spivar::aparch_loglik(kRef, r) - 1e-6);
    REQUIRE(fit.persistence < 1.0);

    REQUIRE(std::abs(fit.params.mu - kRef.mu) < 0.1);
    REQUIRE(std::abs(fit.params.alpha - kRef.alpha) < 0.05);
    REQUIRE(fit.params.beta > 0.85);
    REQUIRE(fit.params.beta < 0.995);
    REQUIRE(std::abs(fit.params.gamma - kRef.gamma) < 0.3);
    REQUIRE(fit.params.delta > 0.5);
    REQUIRE(fit.params.delta < 2.5);
    REQUIRE(fit.params.m > 3.0);
    REQUIRE(fit.params.m < 14.0);
    REQUIRE(std::abs(fit.params.nu - kRef.nu) < 0.6);

    // Incumbent log-likelihood never decreases across accepted improvements.
    for (std::size_t i = 1; i < fit.incumbent.size(); ++i)
        REQUIRE(fit.incumbent[i] >= fit.incumbent[i - 1]);

    REQUIRE(fit.se_valid);
    for (int i = 0; i < AparchParams::kCount; ++i) {
        REQUIRE(fit.std_errors[i] > 0.0);
        REQUIRE(std::isfinite(fit.t_stats[i]));
        REQUIRE(fit.p_values[i] >= 0.0);
        REQUIRE(fit.p_values[i] <= 1.0);
    }
}

TEST_CASE("fit is deterministic across identical calls", "[aparch][slow]") {
    const auto r = spivar::aparch_simulate(kRef, 400, 100, 2);
    spivar::FitOptions opt;
    opt.max_iterations = 600;
    opt.multi_start = 2;
    opt.seed = 17;
    const auto f1 = spivar::aparch_fit(r, opt);
    const auto f2 = spivar::aparch_fit(r, opt);
    REQUIRE(f1.params.to_array() == f2.params.to_array());
    REQUIRE(f1.loglik == f2.loglik);
    REQUIRE(f1.iterations == f2.iterations);
}

TEST_CASE("fit input validation", "[aparch]") {
    std::vector<double> tiny(50, 0.1);
    REQUIRE_THROWS_AS(spivar::aparch_fit(tiny), std::domain_error);
    std::vector<double> flat(300, 0.25);
    REQUIRE_THROWS_AS(spivar::aparch_fit(flat), std::domain_error);
    std::vector<double> with_nan(300, 0.1);
    with_nan[150] = std::nan("");
    REQUIRE_THROWS_AS(spivar::aparch_fit(with_nan), std::domain_error);
}
