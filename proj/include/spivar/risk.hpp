#pragma once

// Value-at-Risk construction, coverage backtests, and tail-loss measures for
// one-step-ahead forecasts produced by the volatility filter.
//
// Conventions used throughout:
//  * Quantile levels below 0.5 describe a long position (losses in the left
//    tail); levels above 0.5 describe a short position (right tail).  The
//    nominal violation probability is min(level, 1 - level) either way.
//  * A violation is strict: return < VaR for long, return > VaR for short.
//  * Likelihood-ratio statistics use the 0 * log(0) = 0 convention, so
//    boundary counts stay finite.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "spivar/detail/linalg.hpp"
#include "spivar/spiv.hpp"
#include "spivar/special_functions.hpp"

namespace spivar {

enum class PositionSide { Long, Short };

inline PositionSide side_for_level(double level) {
    return level < 0.5 ? PositionSide::Long : PositionSide::Short;
}

struct VarSeries {
    double level = 0.0;           // quantile level as configured (0.05, 0.95, ...)
    PositionSide side = PositionSide::Long;
    double violation_prob = 0.0;  // nominal tail probability min(level, 1-level)
    double dist_quantile = 0.0;   // innovation quantile at `level`
    std::vector<double> var;      // VaR_t = mu + quantile * sigma_t
};

inline VarSeries var_series(double mu, const std::vector<double>& sigma,
                            const SpivDist& dist, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("var_series: level must lie in (0, 1)");
    if (sigma.empty()) throw std::invalid_argument("var_series: sigma is empty");
    VarSeries out;
    out.level = level;
    out.side = side_for_level(level);
    out.violation_prob = std::min(level, 1.0 - level);
    out.dist_quantile = dist.quantile(level);
    out.var.resize(sigma.size());
    for (std::size_t t = 0; t < sigma.size(); ++t) {
        if (!(sigma[t] > 0.0) || !std::isfinite(sigma[t]))
            throw std::invalid_argument("var_series: sigma must be positive and finite");
        out.var[t] = mu + out.dist_quantile * sigma[t];
    }
    return out;
}

inline std::vector<int> hit_sequence(const std::vector<double>& returns,
                                     const VarSeries& vs) {
    if (returns.size() != vs.var.size())
        throw std::invalid_argument("hit_sequence: returns/VaR length mismatch");
    std::vector<int> hits(returns.size());
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const bool hit = vs.side == PositionSide::Long ? returns[t] < vs.var[t]
                                                       : returns[t] > vs.var[t];
        hits[t] = hit ? 1 : 0;
    }
    return hits;
}

struct TestOutcome {
    double stat = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;  // boundary hit pattern; p fixed at 1
};

namespace detail {

inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

}  // namespace detail

// Unconditional coverage (proportion-of-failures) LR test against chi^2(1).
inline TestOutcome kupiec_pof(const std::vector<int>& hits, double p_nominal) {
    if (hits.empty()) throw std::invalid_argument("kupiec_pof: empty hit sequence");
    if (!(p_nominal > 0.0 && p_nominal < 1.0))
        throw std::invalid_argument("kupiec_pof: nominal probability must lie in (0, 1)");
    const double n = static_cast<double>(hits.size());
    double x = 0.0;
    for (int h : hits) x += h;
    const double phat = x / n;
    // grouped per count so the statistic is exactly zero when phat == nominal
    double lr = 0.0;
    if (n - x > 0.0) lr += (n - x) * (std::log1p(-p_nominal) - std::log1p(-phat));
    if (x > 0.0) lr += x * (std::log(p_nominal) - std::log(phat));
    lr *= -2.0;
    if (lr < 0.0) lr = 0.0;
    TestOutcome out;
    out.stat = lr;
    out.p_value = chi2_sf(lr, 1.0);
    return out;
}

// First-order Markov independence LR test against chi^2(1).  With zero or
// all-ones hits the alternative is not identified; the outcome is flagged
// degenerate with p = 1.
inline TestOutcome christoffersen_independence(const std::vector<int>& hits) {
    if (hits.size() < 2)
        throw std::invalid_argument("christoffersen_independence: need at least 2 observations");
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (std::size_t t = 1; t < hits.size(); ++t) {
        if (hits[t - 1] == 0)
            (hits[t] == 0 ? n00 : n01) += 1.0;
        else
            (hits[t] == 0 ? n10 : n11) += 1.0;
    }
    TestOutcome out;
    const double ones = n01 + n11 + (hits[0] == 1 ? 1.0 : 0.0);
    if (ones == 0.0 || ones == static_cast<double>(hits.size())) {
        out.stat = 0.0;
        out.p_value = 1.0;
        out.degenerate = true;
        return out;
    }
    const double total = n00 + n01 + n10 + n11;
    const double pi = (n01 + n11) / total;
    const double pi01 = (n00 + n01) > 0.0 ? n01 / (n00 + n01) : 0.0;
    const double pi11 = (n10 + n11) > 0.0 ? n11 / (n10 + n11) : 0.0;
    const double l0 = detail::xlogy(n01 + n11, pi) + detail::xlogy(n00 + n10, 1.0 - pi);
    const double l1 = detail::xlogy(n01, pi01) + detail::xlogy(n00, 1.0 - pi01) +
                      detail::xlogy(n11, pi11) + detail::xlogy(n10, 1.0 - pi11);
    double lr = 2.0 * (l1 - l0);
    if (lr < 0.0) lr = 0.0;
    out.stat = lr;
    out.p_value = chi2_sf(lr, 1.0);
    return out;
}

// Joint coverage-and-independence test: the two LR statistics add exactly and
// the sum is referred to chi^2(2).
inline TestOutcome conditional_coverage(const std::vector<int>& hits, double p_nominal) {
    const TestOutcome uc = kupiec_pof(hits, p_nominal);
    const TestOutcome ind = christoffersen_independence(hits);
    TestOutcome out;
    out.stat = uc.stat + ind.stat;
    out.p_value = chi2_sf(out.stat, 2.0);
    out.degenerate = uc.degenerate || ind.degenerate;
    return out;
}

struct DqOutcome {
    double stat = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();
    int dof = 0;
    bool degenerate = false;
};

// Dynamic quantile regression test.  The demeaned hit indicator is regressed
// on a constant, `lags` of itself, and `lags` of the VaR path; the Wald form
// theta' X'X theta / (a (1-a)) is referred to chi^2 with dof equal to the
// numerical rank of X'X (collinear regressors, e.g. a constant VaR path
// duplicating the intercept, drop out rather than blowing up the statistic).
inline DqOutcome dq_test(const std::vector<int>& hits, const std::vector<double>& var,
                         double p_nominal, int lags = 5) {
    if (hits.size() != var.size())
        throw std::invalid_argument("dq_test: hits/VaR length mismatch");
    if (lags < 1) throw std::invalid_argument("dq_test: lags must be >= 1");
    if (!(p_nominal > 0.0 && p_nominal < 1.0))
        throw std::invalid_argument("dq_test: nominal probability must lie in (0, 1)");
    const std::size_t n = hits.size();
    const std::size_t k = static_cast<std::size_t>(lags);
    const std::size_t cols = 2 * k + 1;
    if (n < k + cols + 1)
        throw std::invalid_argument("dq_test: series too short for requested lags");

    DqOutcome out;
    double x = 0.0;
    for (int h : hits) x += h;
    if (x == 0.0 || x == static_cast<double>(n)) {
        out.stat = 0.0;
        out.p_value = 1.0;
        out.degenerate = true;
        return out;
    }

    const std::size_t rows = n - k;
    std::vector<double> X(rows * cols);
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + k;
        y[r] = static_cast<double>(hits[t]) - p_nominal;
        double* row = &X[r * cols];
        row[0] = 1.0;
        for (std::size_t j = 1; j <= k; ++j) {
            row[j] = static_cast<double>(hits[t - j]) - p_nominal;
            row[k + j] = var[t - j];
        }
    }

    std::vector<double> gram(cols * cols, 0.0);
    std::vector<double> rhs(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = &X[r * cols];
        for (std::size_t i = 0; i < cols; ++i) {
            rhs[i] += row[i] * y[r];
            for (std::size_t j = i; j < cols; ++j) gram[i * cols + j] += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < i; ++j) gram[i * cols + j] = gram[j * cols + i];

    const detail::RankSolve sol = detail::solve_gram_rank(gram, rhs, cols);
    if (sol.rank == 0) {
        out.stat = 0.0;
        out.p_value = 1.0;
        out.degenerate = true;
        return out;
    }
    // theta' X'X theta equals the squared norm of the fitted values, which is
    // invariant to which solution of the normal equations the rank-revealing
    // solve returned.
    double quad = 0.0;
    for (std::size_t i = 0; i < cols; ++i) {
        double gi = 0.0;
        for (std::size_t j = 0; j < cols; ++j) gi += gram[i * cols + j] * sol.theta[j];
        quad += sol.theta[i] * gi;
    }
    double stat = quad / (p_nominal * (1.0 - p_nominal));
    if (stat < 0.0) stat = 0.0;
    out.stat = stat;
    out.dof = static_cast<int>(sol.rank);
    out.p_value = chi2_sf(stat, static_cast<double>(sol.rank));
    return out;
}

// Magnitude-aware loss: each violation scores 1 + (return - VaR)^2,
// non-violations score 0.
inline double lopez_loss(const std::vector<double>& returns, const VarSeries& vs) {
    const std::vector<int> hits = hit_sequence(returns, vs);
    double total = 0.0;
    for (std::size_t t = 0; t < hits.size(); ++t) {
        if (hits[t]) {
            const double d = returns[t] - vs.var[t];
            total += 1.0 + d * d;
        }
    }
    return total;
}

struct SarmaLosses {
    double regulatory = 0.0;  // squared exceedance on violation days
    double firm = 0.0;        // regulatory plus opportunity cost of reserved capital
};

// The firm loss charges `opportunity_cost` times the capital tied up by the
// VaR bound on non-violation days: -VaR for a long position (VaR is negative),
// +VaR for a short one.
inline SarmaLosses sarma_losses(const std::vector<double>& returns, const VarSeries& vs,
                                double opportunity_cost) {
    if (!(opportunity_cost >= 0.0))
        throw std::invalid_argument("sarma_losses: opportunity cost must be >= 0");
    const std::vector<int> hits = hit_sequence(returns, vs);
    SarmaLosses out;
    for (std::size_t t = 0; t < hits.size(); ++t) {
        if (hits[t]) {
            const double d = returns[t] - vs.var[t];
            out.regulatory += d * d;
            out.firm += d * d;
        } else {
            const double capital =
                vs.side == PositionSide::Long ? -vs.var[t] : vs.var[t];
            out.firm += opportunity_cost * capital;
        }
    }
    return out;
}

struct TailMeasures {
    std::size_t violations = 0;
    double violation_ratio = 0.0;   // observed hit frequency x/n
    double lambda = 0.0;            // violation_ratio / nominal probability
    double tce1 = 0.0;              // mean return over violation days
    double tce2 = 0.0;              // mean return/VaR ratio over violation days
    double var_ref = 0.0;           // mean VaR over violation days
    double es = 0.0;                // tail expectation, scaled beyond VaR when lambda > 1
    double mean_var = 0.0;          // mean VaR over the full sample
    double dist_quantile = 0.0;     // innovation-law quantile behind the VaR path
    double empirical_quantile = 0.0;  // sample quantile of returns at `level`
    bool degenerate = false;        // no violations observed
};

namespace detail {

// Linear-interpolation sample quantile (the common "type 7" definition).
inline double sample_quantile(std::vector<double> x, double level) {
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * level;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= x.size()) return x.back();
    const double frac = h - static_cast<double>(lo);
    return x[lo] + frac * (x[lo + 1] - x[lo]);
}

}  // namespace detail

// Combination rule linking expected shortfall to the tail conditional
// expectation: when the observed violation frequency exceeds the nominal one
// (lambda > 1) the shortfall is pushed beyond TCE by (lambda - 1) times the
// gap between TCE and the VaR reference; otherwise ES reduces to TCE.
inline double expected_shortfall(double tce, double lambda, double var_ref) {
    return lambda > 1.0 ? tce + (lambda - 1.0) * (tce - var_ref) : tce;
}

// Tail conditional expectations and expected shortfall.  TCE1 averages the
// returns on violation days; TCE2 averages return/VaR on those days.
inline TailMeasures tail_measures(const std::vector<double>& returns, const VarSeries& vs) {
    const std::vector<int> hits = hit_sequence(returns, vs);
    const std::size_t n = hits.size();
    TailMeasures out;
    out.dist_quantile = vs.dist_quantile;
    double var_sum = 0.0;
    for (double v : vs.var) var_sum += v;
    out.mean_var = var_sum / static_cast<double>(n);
    out.empirical_quantile = detail::sample_quantile(returns, vs.level);

    double x = 0.0, r_sum = 0.0, ratio_sum = 0.0, vref_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (!hits[t]) continue;
        x += 1.0;
        r_sum += returns[t];
        ratio_sum += returns[t] / vs.var[t];
        vref_sum += vs.var[t];
    }
    out.violations = static_cast<std::size_t>(x);
    out.violation_ratio = x / static_cast<double>(n);
    out.lambda = out.violation_ratio / vs.violation_prob;
    if (out.violations == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.tce1 = out.tce2 = out.var_ref = out.es = nan;
        out.degenerate = true;
        return out;
    }
    out.tce1 = r_sum / x;
    out.tce2 = ratio_sum / x;
    out.var_ref = vref_sum / x;
    out.es = expected_shortfall(out.tce1, out.lambda, out.var_ref);
    return out;
}

struct BacktestRow {
    double level = 0.0;
    PositionSide side = PositionSide::Long;
    std::size_t observations = 0;
    std::size_t violations = 0;
    double coverage_ratio = 0.0;  // failure ratio for long, success ratio for short
    TestOutcome kupiec;
    TestOutcome independence;
    TestOutcome coverage;
    DqOutcome dq;
    double lopez = 0.0;
    SarmaLosses sarma;
    TailMeasures tail;
    VarSeries var;
};

// Full per-level evaluation: VaR path, hit tests, losses, tail measures.
inline BacktestRow backtest_level(const std::vector<double>& returns, double mu,
                                  const std::vector<double>& sigma, const SpivDist& dist,
                                  double level, int dq_lags = 5,
                                  double opportunity_cost = 0.0) {
    if (returns.size() != sigma.size())
        throw std::invalid_argument("backtest_level: returns/sigma length mismatch");
    BacktestRow row;
    row.level = level;
    row.var = var_series(mu, sigma, dist, level);
    row.side = row.var.side;
    row.observations = returns.size();
    const std::vector<int> hits = hit_sequence(returns, row.var);
    std::size_t x = 0;
    for (int h : hits) x += static_cast<std::size_t>(h);
    row.violations = x;
    const double freq = static_cast<double>(x) / static_cast<double>(returns.size());
    row.coverage_ratio = row.side == PositionSide::Long ? freq : 1.0 - freq;
    row.kupiec = kupiec_pof(hits, row.var.violation_prob);
    row.independence = christoffersen_independence(hits);
    row.coverage = conditional_coverage(hits, row.var.violation_prob);
    row.dq = dq_test(hits, row.var.var, row.var.violation_prob, dq_lags);
    row.lopez = lopez_loss(returns, row.var);
    row.sarma = sarma_losses(returns, row.var, opportunity_cost);
    row.tail = tail_measures(returns, row.var);
    return row;
}

}  // namespace spivar
