#pragma once

// APARCH(1,1) volatility model with standardized Pearson IV innovations:
//   r_t = mu + eps_t,  eps_t = sigma_t z_t,
//   sigma_t^delta = omega + alpha (|eps_{t-1}| - gamma eps_{t-1})^delta
//                   + beta sigma_{t-1}^delta.
// Presample terms are set to their sample analogues: the news term starts at
// the mean of (|eps_s| - gamma eps_s)^delta over the whole sample, and
// sigma^delta starts at (mean eps^2)^{delta/2}, both recomputed from the
// residuals of the current mean parameter.  Persistence is
// alpha E[(|Z| - gamma Z)^delta] + beta with Z the fitted innovation law.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "detail/linalg.hpp"
#include "detail/optim.hpp"
#include "spiv.hpp"

namespace spivar {

struct AparchParams {
    double mu = 0.0;      // conditional mean
    double omega = 0.0;   // volatility intercept
    double alpha = 0.0;   // news coefficient
    double beta = 0.0;    // volatility memory
    double gamma = 0.0;   // leverage asymmetry, |gamma| < 1
    double delta = 2.0;   // power of the volatility recursion
    double nu = 0.0;      // innovation skew
    double m = 6.0;       // innovation tail parameter, m > 2

    static constexpr int kCount = 8;
    static constexpr std::array<const char*, kCount> names() {
        return {"mu", "omega", "alpha", "beta", "gamma", "delta", "nu", "m"};
    }
    std::array<double, kCount> to_array() const {
        return {mu, omega, alpha, beta, gamma, delta, nu, m};
    }
    static AparchParams from_array(const std::array<double, kCount>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
    }
};

struct FilterState {
    std::vector<double> sigma_delta;     // sigma_t^delta
    std::vector<double> sigma;           // sigma_t
    std::vector<double> residuals;       // eps_t
    std::vector<double> std_residuals;   // z_t = eps_t / sigma_t
};

struct FitOptions {
    int max_iterations = 5000;
    double tol = 1e-8;     // stop when two consecutive stage gains fall below this
    int multi_start = 1;
    std::uint64_t seed = 0;
};

struct FitResult {
    AparchParams params;
    double loglik = 0.0;
    double persistence = 0.0;
    std::array<double, AparchParams::kCount> std_errors{};
    std::array<double, AparchParams::kCount> t_stats{};
    std::array<double, AparchParams::kCount> p_values{};
    double hessian_condition = 0.0;
    bool se_valid = false;
    FilterState state;
    bool converged = false;
    int iterations = 0;
    std::vector<double> incumbent;  // best loglik after each accepted improvement
};

struct SandwichSe {
    std::array<double, AparchParams::kCount> std_errors{};
    std::array<double, AparchParams::kCount> t_stats{};
    std::array<double, AparchParams::kCount> p_values{};
    double hessian_condition = 0.0;
};

namespace detail {

inline bool aparch_params_ok(const AparchParams& p) {
    for (double v : p.to_array())
        if (!std::isfinite(v)) return false;
    return p.omega > 0.0 && p.alpha > 0.0 && p.beta >= 0.0 && std::abs(p.gamma) < 1.0 &&
           p.delta > 0.0 && p.m > 2.0;
}

inline void validate_aparch_params(const AparchParams& p) {
    if (!aparch_params_ok(p))
        throw std::domain_error(
            "AparchParams: requires finite values with omega > 0, alpha > 0, beta >= 0, "
            "|gamma| < 1, delta > 0, m > 2");
}

}  // namespace detail

inline double aparch_persistence(const AparchParams& p) {
    detail::validate_aparch_params(p);
    const SpivDist innov(p.m, p.nu);
    return p.alpha * innov.power_expectation(p.gamma, p.delta) + p.beta;
}

inline FilterState aparch_filter(const AparchParams& p, const std::vector<double>& returns) {
    detail::validate_aparch_params(p);
    const std::size_t n = returns.size();
    if (n == 0) throw std::domain_error("aparch_filter: empty return series");
    for (double r : returns)
        if (!std::isfinite(r)) throw std::domain_error("aparch_filter: non-finite return");

    FilterState st;
    st.sigma_delta.resize(n);
    st.sigma.resize(n);
    st.residuals.resize(n);
    st.std_residuals.resize(n);

    double news_mean = 0.0;  // sample mean of (|eps| - gamma eps)^delta
    double sq_mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double eps = returns[t] - p.mu;
        st.residuals[t] = eps;
        news_mean += std::pow(std::abs(eps) - p.gamma * eps, p.delta);
        sq_mean += eps * eps;
    }
    news_mean /= static_cast<double>(n);
    sq_mean /= static_cast<double>(n);

    double prev_news = news_mean;
    double prev_sd = std::pow(sq_mean, 0.5 * p.delta);
    const double inv_delta = 1.0 / p.delta;
    for (std::size_t t = 0; t < n; ++t) {
        const double sd = p.omega + p.alpha * prev_news + p.beta * prev_sd;
        st.sigma_delta[t] = sd;
        const double sig = std::pow(sd, inv_delta);
        st.sigma[t] = sig;
        st.std_residuals[t] = st.residuals[t] / sig;
        const double eps = st.residuals[t];
        prev_news = std::pow(std::abs(eps) - p.gamma * eps, p.delta);
        prev_sd = sd;
    }
    return st;
}

// Per-observation log-likelihood contributions: spiv log-density of the
// standardized residual minus the log-volatility Jacobian.
inline std::vector<double> aparch_loglik_terms(const AparchParams& p,
                                               const std::vector<double>& returns) {
    const FilterState st = aparch_filter(p, returns);
    const SpivDist innov(p.m, p.nu);
    std::vector<double> terms(returns.size());
    for (std::size_t t = 0; t < returns.size(); ++t)
        terms[t] = innov.log_pdf(st.std_residuals[t]) - std::log(st.sigma[t]);
    return terms;
}

// Total log-likelihood; returns -infinity outside the valid region
// (including persistence >= 1 - 1e-6) so optimizers can treat the
// constraints as barriers.
inline double aparch_loglik(const AparchParams& p, const std::vector<double>& returns) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (!detail::aparch_params_ok(p)) return kNegInf;
    if (p.delta >= p.m) return kNegInf;  // persistence expectation diverges
    try {
        if (aparch_persistence(p) >= 1.0 - 1e-6) return kNegInf;
        double sum = 0.0;
        for (double v : aparch_loglik_terms(p, returns)) sum += v;
        return std::isfinite(sum) ? sum : kNegInf;
    } catch (const ConvergenceError&) {
        return kNegInf;  // quadrature breakdown only happens in pathological corners
    }
}

// Simulates n returns after discarding burn_in, with sigma^delta started at
// its stationary mean omega / (1 - persistence).
inline std::vector<double> aparch_simulate(const AparchParams& p, std::size_t n,
                                           std::size_t burn_in, std::uint64_t seed) {
    detail::validate_aparch_params(p);
    const SpivDist innov(p.m, p.nu);
    const double persistence = aparch_persistence(p);
    if (persistence >= 1.0)
        throw std::domain_error("aparch_simulate: requires persistence < 1");

    const std::size_t total = n + burn_in;
    const std::vector<double> z = innov.sample(total, seed);
    std::vector<double> out;
    out.reserve(n);
    double sd = p.omega / (1.0 - persistence);
    const double inv_delta = 1.0 / p.delta;
    for (std::size_t t = 0; t < total; ++t) {
        const double sig = std::pow(sd, inv_delta);
        const double eps = sig * z[t];
        if (t >= burn_in) out.push_back(p.mu + eps);
        sd = p.omega + p.alpha * std::pow(std::abs(eps) - p.gamma * eps, p.delta) + p.beta * sd;
    }
    return out;
}

namespace detail {

// Working-coordinate transform: mu linear, omega through log, everything
// else through a sigmoid onto an open box.  Gradients stay alive across the
// whole working space and every working point maps to a valid model.
struct ParamTransform {
    struct Box {
        double lo, hi;
    };
    // Boxes for [alpha, beta, gamma, delta, nu, m] in parameter-array order
    // indices 2..7.
    static constexpr Box kBoxes[6] = {{1e-8, 2.0}, {0.0, 1.0},   {-1.0, 1.0},
                                      {0.05, 4.0}, {-20.0, 20.0}, {2.05, 60.0}};

    static double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
    static double logit(double s) { return std::log(s / (1.0 - s)); }

    static std::vector<double> to_working(const std::array<double, 8>& p) {
        std::vector<double> t(8);
        t[0] = p[0];
        t[1] = std::log(p[1]);
        for (int i = 2; i < 8; ++i) {
            const Box b = kBoxes[i - 2];
            const double s =
                std::clamp((p[i] - b.lo) / (b.hi - b.lo), 1e-12, 1.0 - 1e-12);
            t[i] = logit(s);
        }
        return t;
    }

    static std::array<double, 8> to_params(const std::vector<double>& t) {
        std::array<double, 8> p;
        p[0] = t[0];
        p[1] = std::exp(t[1]);
        for (int i = 2; i < 8; ++i) {
            const Box b = kBoxes[i - 2];
            p[i] = b.lo + (b.hi - b.lo) * sigmoid(t[i]);
        }
        return p;
    }
};

inline double sample_mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double sample_variance(const std::vector<double>& x) {
    const double mu = sample_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size() - 1);
}

}  // namespace detail

// Robust (sandwich) standard errors at the given parameters: A^{-1} B A^{-1}
// / n with A the finite-difference Hessian of the mean log-likelihood and B
// the outer product of per-observation scores.  Throws ConvergenceError with
// a condition estimate when the Hessian is numerically singular.
inline SandwichSe aparch_robust_se(const AparchParams& params,
                                   const std::vector<double>& returns) {
    constexpr int k = AparchParams::kCount;
    const double n = static_cast<double>(returns.size());
    const std::array<double, k> theta = params.to_array();

    std::array<double, k> h;
    for (int i = 0; i < k; ++i) h[i] = 1e-5 * std::max(1.0, std::abs(theta[i]));

    auto terms_at = [&returns](std::array<double, k> th) {
        return aparch_loglik_terms(AparchParams::from_array(th), returns);
    };
    auto mean_at = [&terms_at, n](const std::array<double, k>& th) {
        const auto terms = terms_at(th);
        double s = 0.0;
        for (double v : terms) s += v;
        return s / n;
    };

    // Score matrix via central differences of the per-observation terms.
    std::vector<std::vector<double>> scores(k);
    for (int i = 0; i < k; ++i) {
        auto up = theta, dn = theta;
        up[i] += h[i];
        dn[i] -= h[i];
        const auto tu = terms_at(up);
        const auto td = terms_at(dn);
        scores[i].resize(returns.size());
        for (std::size_t t = 0; t < returns.size(); ++t)
            scores[i][t] = (tu[t] - td[t]) / (2.0 * h[i]);
    }
    std::vector<double> b(k * k, 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < returns.size(); ++t) s += scores[i][t] * scores[j][t];
            b[i * k + j] = b[j * k + i] = s / n;
        }

    // Hessian of the mean log-likelihood via central second differences.
    std::vector<double> a(k * k, 0.0);
    const double f0 = mean_at(theta);
    for (int i = 0; i < k; ++i) {
        auto up = theta, dn = theta;
        up[i] += h[i];
        dn[i] -= h[i];
        a[i * k + i] = (mean_at(up) - 2.0 * f0 + mean_at(dn)) / (h[i] * h[i]);
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            auto pp = theta, pm = theta, mp = theta, mm = theta;
            pp[i] += h[i]; pp[j] += h[j];
            pm[i] += h[i]; pm[j] -= h[j];
            mp[i] -= h[i]; mp[j] += h[j];
            mm[i] -= h[i]; mm[j] -= h[j];
            const double v =
                (mean_at(pp) - mean_at(pm) - mean_at(mp) + mean_at(mm)) / (4.0 * h[i] * h[j]);
            a[i * k + j] = a[j * k + i] = v;
        }
    }

    double cond = 0.0;
    std::vector<double> ainv;
    try {
        ainv = detail::invert(a, k, cond);
    } catch (const ConvergenceError&) {
        throw ConvergenceError("aparch_robust_se: singular Hessian (condition estimate " +
                               std::to_string(cond) + ")");
    }
    if (!(cond < 1e14))
        throw ConvergenceError("aparch_robust_se: singular Hessian (condition estimate " +
                               std::to_string(cond) + ")");

    // V = A^{-1} B A^{-1} / n.
    std::vector<double> ab(k * k, 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double s = 0.0;
            for (int l = 0; l < k; ++l) s += ainv[i * k + l] * b[l * k + j];
            ab[i * k + j] = s;
        }
    SandwichSe out;
    out.hessian_condition = cond;
    for (int i = 0; i < k; ++i) {
        double vii = 0.0;
        for (int l = 0; l < k; ++l) vii += ab[i * k + l] * ainv[l * k + i];
        vii /= n;
        out.std_errors[i] = vii > 0.0 ? std::sqrt(vii) : std::numeric_limits<double>::quiet_NaN();
        out.t_stats[i] = theta[i] / out.std_errors[i];
        out.p_values[i] = std::erfc(std::abs(out.t_stats[i]) * M_SQRT1_2);
    }
    return out;
}

// Maximum-likelihood fit: alternating Nelder-Mead and BFGS stages in the
// working coordinates, stopping once two consecutive stages each improve the
// log-likelihood by less than options.tol.  With multi_start > 1 the
// transformed start point is perturbed with seeded uniform offsets and the
// best final likelihood wins (ties break to the lexicographically smaller
// parameter vector).
inline FitResult aparch_fit(const std::vector<double>& returns, const FitOptions& options = {}) {
    if (returns.size() < 100)
        throw std::domain_error("aparch_fit: requires at least 100 observations");
    for (double r : returns)
        if (!std::isfinite(r)) throw std::domain_error("aparch_fit: non-finite return");
    const double var = detail::sample_variance(returns);
    if (!(var > 0.0)) throw std::domain_error("aparch_fit: returns have zero variance");
    if (options.max_iterations <= 0 || options.multi_start <= 0 || !(options.tol > 0.0))
        throw std::invalid_argument("aparch_fit: bad options");

    const std::array<double, 8> start = {
        detail::sample_mean(returns), 0.05 * var, 0.05, 0.90, 0.0, 1.5, 0.0, 6.0};
    const std::vector<double> t_start = detail::ParamTransform::to_working(start);

    std::mt19937_64 gen(options.seed);
    auto next_uniform = [&gen]() {
        return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    };

    FitResult best;
    bool have_best = false;
    for (int trial = 0; trial < options.multi_start; ++trial) {
        std::vector<double> t = t_start;
        if (trial > 0)
            for (double& v : t) v += (next_uniform() - 0.5);

        FitResult run;
        auto objective = [&returns, &run](const std::vector<double>& tw) {
            const double ll = aparch_loglik(
                AparchParams::from_array(detail::ParamTransform::to_params(tw)), returns);
            return std::isfinite(ll) ? -ll : 1e100;
        };
        auto improved = [&run](double fval) {
            if (fval < 1e100) run.incumbent.push_back(-fval);
        };

        double f = objective(t);
        double prev_gain = std::numeric_limits<double>::infinity();
        bool converged = false;
        int iters = 0;
        for (int stage = 0; iters < options.max_iterations; ++stage) {
            const int budget = options.max_iterations - iters;
            detail::StageResult sr;
            if (stage % 2 == 0)
                sr = detail::nelder_mead(objective, t, f, std::min(budget, 400), improved);
            else
                sr = detail::bfgs(objective, t, f, std::min(budget, 120), improved);
            iters += sr.iterations;
            const double gain = f - sr.f;
            t = std::move(sr.x);
            f = sr.f;
            if (stage > 0 && gain < options.tol && prev_gain < options.tol) {
                converged = true;
                break;
            }
            prev_gain = gain;
        }

        run.params = AparchParams::from_array(detail::ParamTransform::to_params(t));
        run.loglik = -f;
        run.converged = converged;
        run.iterations = iters;
        if (!have_best || run.loglik > best.loglik ||
            (run.loglik == best.loglik && run.params.to_array() < best.params.to_array())) {
            best = std::move(run);
            have_best = true;
        }
    }

    best.state = aparch_filter(best.params, returns);
    best.persistence = aparch_persistence(best.params);
    try {
        const SandwichSe se = aparch_robust_se(best.params, returns);
        best.std_errors = se.std_errors;
        best.t_stats = se.t_stats;
        best.p_values = se.p_values;
        best.hessian_condition = se.hessian_condition;
        best.se_valid = true;
        for (double s : best.std_errors)
            if (!std::isfinite(s)) best.se_valid = false;
    } catch (const ConvergenceError&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        best.std_errors.fill(nan);
        best.t_stats.fill(nan);
        best.p_values.fill(nan);
        best.se_valid = false;
    }
    return best;
}

}  // namespace spivar
