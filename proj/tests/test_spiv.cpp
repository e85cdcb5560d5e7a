#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "spivar/spiv.hpp"

using Catch::Approx;
using spivar::SpivDist;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Quadrature reference for the CDF, independent of the closed-form paths.
double cdf_oracle(const SpivDist& d, double z) {
    auto pdf = [&d](double x) { return d.pdf(x); };
    if (z <= 0.0) return spivar::adaptive_quad(pdf, -kInf, z, 1e-13);
    return 1.0 - spivar::adaptive_quad(pdf, z, kInf, 1e-13);
}

}  // namespace

TEST_CASE("standardization constants and normalization", "[spiv]") {
    const SpivDist d(5.6275, 0.4748);
    REQUIRE(d.mu_hat() == Approx(-0.102603997839006).epsilon(1e-12));
    REQUIRE(d.sigma_hat() == Approx(0.527801202152023).epsilon(1e-12));

    for (double m : {2.5, 4.0, 8.0}) {
        for (double nu : {-2.0, 0.0, 2.0}) {
            const SpivDist dist(m, nu);
            auto pdf = [&dist](double z) { return dist.pdf(z); };
            auto zpdf = [&dist](double z) { return z * dist.pdf(z); };
            auto z2pdf = [&dist](double z) { return z * z * dist.pdf(z); };
            REQUIRE(spivar::adaptive_quad(pdf, -kInf, kInf, 1e-11) == Approx(1.0).epsilon(1e-9));
            REQUIRE(spivar::adaptive_quad(zpdf, -kInf, kInf, 1e-11) == Approx(0.0).margin(1e-8));
            if (m > 2.8) {  // second moment integrable with margin
                REQUIRE(spivar::adaptive_quad(z2pdf, -kInf, kInf, 1e-10) ==
                        Approx(1.0).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("density spot values", "[spiv]") {
    REQUIRE(SpivDist(5, 0).pdf(0.0) == Approx(0.490070129263815155).epsilon(1e-12));
    const SpivDist d(4.5, 1.0);
    REQUIRE(d.pdf(0.7) == Approx(0.365982323845710224).epsilon(1e-12));
    REQUIRE(d.pdf(-2.0) == Approx(0.0394837238348140097).epsilon(1e-12));
    REQUIRE(SpivDist(2.5, -2.0).pdf(1.3) == Approx(0.050481450609046007).epsilon(1e-12));
    REQUIRE(d.log_pdf(0.7) == Approx(std::log(0.365982323845710224)).epsilon(1e-12));

    // nu = 0 is symmetric; the skew direction is opposite to the sign of nu.
    const SpivDist sym(5, 0);
    for (double z : {0.3, 1.0, 2.7}) REQUIRE(sym.pdf(z) == Approx(sym.pdf(-z)).epsilon(1e-13));
    const SpivDist skewed(6, 2.0);
    auto z3pdf = [&skewed](double z) { return z * z * z * skewed.pdf(z); };
    REQUIRE(spivar::adaptive_quad(z3pdf, -kInf, kInf, 1e-9) ==
            Approx(-0.990375136944).epsilon(1e-6));
}

TEST_CASE("nu = 0 reduces to the rescaled Student-t", "[spiv]") {
    const double m = 5.0;
    const SpivDist d(m, 0.0);
    const boost::math::students_t_distribution<double> t(m);
    const double scale = std::sqrt(m / (m - 2.0));  // variance of t(m) is m/(m-2)
    for (double z : {-4.0, -1.5, -0.2, 0.0, 0.8, 2.4, 6.0}) {
        REQUIRE(d.pdf(z) == Approx(boost::math::pdf(t, z * scale) * scale).epsilon(1e-11));
        REQUIRE(d.cdf(z) == Approx(boost::math::cdf(t, z * scale)).epsilon(1e-10));
    }
    REQUIRE(d.quantile(0.05) == Approx(-1.56084975834423).epsilon(1e-10));
}

TEST_CASE("cdf matches the quadrature oracle across regions", "[spiv]") {
    // Includes the parameter pairs where the central-region formula
    // degenerates (odd integer m with nu near 0) and the band where its
    // series variable approaches the unit circle.
    const double grid_z[] = {-8.0, -3.0, -1.8, -1.74, -1.0, 0.0, 1.0, 1.74, 1.8, 3.0, 8.0};
    for (double m : {2.5, 3.0, 5.0, 8.0}) {
        for (double nu : {-2.0, 0.0, 0.02, 2.0}) {
            const SpivDist d(m, nu);
            for (double z : grid_z) {
                const double got = d.cdf(z);
                const double want = cdf_oracle(d, z);
                INFO("m=" << m << " nu=" << nu << " z=" << z);
                REQUIRE(std::abs(got - want) < 1e-10);
            }
        }
    }
}

TEST_CASE("cdf structure: monotone, bounded, reflective", "[spiv]") {
    const SpivDist d(4.5, 1.0);
    const SpivDist r(4.5, -1.0);
    double prev = -1.0;
    for (double z = -12.0; z <= 12.0; z += 0.25) {
        const double p = d.cdf(z);
        REQUIRE(p >= 0.0);
        REQUIRE(p <= 1.0);
        REQUIRE(p >= prev);
        // Reflection identity: P(z | m, nu) = 1 - P(-z | m, -nu).
        REQUIRE(p == Approx(1.0 - r.cdf(-z)).margin(1e-11));
        prev = p;
    }
    REQUIRE(d.cdf(-40.0) < 1e-3);
    REQUIRE(d.cdf(40.0) > 1.0 - 1e-3);
}

TEST_CASE("quantile inverts the cdf", "[spiv]") {
    const SpivDist d(4.0, -1.5);
    double prev = -kInf;
    for (double a : {1e-4, 0.001, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 0.999, 0.9999}) {
        const double q = d.quantile(a);
        REQUIRE(std::abs(d.cdf(q) - a) <= 1e-10);
        REQUIRE(q > prev);
        prev = q;
    }
    REQUIRE_THROWS_AS(d.quantile(0.0), std::domain_error);
    REQUIRE_THROWS_AS(d.quantile(1.0), std::domain_error);
    REQUIRE_THROWS_AS(d.quantile(-0.5), std::domain_error);
}

TEST_CASE("sampling is deterministic and matches the distribution", "[spiv]") {
    const SpivDist d(4.5, 1.0);
    const auto a = d.sample(500, 42);
    const auto b = d.sample(500, 42);
    const auto c = d.sample(500, 43);
    REQUIRE(a == b);
    REQUIRE(a != c);

    // One-sample KS test against the model CDF, 1% critical value.
    auto draws = d.sample(5000, 7);
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double p = d.cdf(draws[i]);
        ks = std::max(ks, std::abs(p - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - p));
    }
    REQUIRE(ks < 1.628 / std::sqrt(n));
}

TEST_CASE("power expectation", "[spiv]") {
    // gamma = 0, delta = 2 recovers the unit variance exactly.
    for (double m : {3.0, 5.0, 9.0}) {
        for (double nu : {-1.0, 0.0, 2.0}) {
            REQUIRE(SpivDist(m, nu).power_expectation(0.0, 2.0) == Approx(1.0).epsilon(1e-8));
        }
    }
    REQUIRE(SpivDist(4, 1).power_expectation(0.5, 1.5) ==
            Approx(0.898005280258618425).epsilon(1e-9));
    REQUIRE(SpivDist(2.5, -2).power_expectation(-0.5, 2.0) ==
            Approx(2.00651157422071026).epsilon(1e-8));
    REQUIRE(SpivDist(8, 0).power_expectation(0.25, 1.0) ==
            Approx(0.765465544619743156).epsilon(1e-9));

    const SpivDist d(3.0, 0.5);
    REQUIRE_THROWS_AS(d.power_expectation(1.0, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(d.power_expectation(0.0, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(d.power_expectation(0.0, 3.0), std::domain_error);   // delta = m diverges
    REQUIRE_THROWS_AS(d.power_expectation(0.0, 3.5), std::domain_error);
    REQUIRE_NOTHROW(d.power_expectation(0.0, 2.9));
}

TEST_CASE("constructor domain errors", "[spiv]") {
    REQUIRE_THROWS_AS(SpivDist(2.0, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(SpivDist(1.2, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(SpivDist(0.3, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(SpivDist(std::nan(""), 0.0), std::invalid_argument);
    REQUIRE_NOTHROW(SpivDist(2.0000001, -3.0));
}
