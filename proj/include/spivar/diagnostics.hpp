#pragma once

// Descriptive statistics, serial-correlation diagnostics and volatility
// forecast loss functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "detail/linalg.hpp"
#include "special_functions.hpp"

namespace spivar {

struct SummaryStats {
    std::size_t n = 0;
    int lags = 0;
    double min = 0.0, max = 0.0, range = 0.0, mean = 0.0, std_dev = 0.0;
    double skewness = 0.0, kurtosis = 0.0;        // kurtosis is raw (normal = 3)
    double jarque_bera = 0.0, jarque_bera_p = 0.0;
    double lb_returns = 0.0, lb_returns_p = 0.0;  // Ljung-Box on the series
    double lb_squared = 0.0, lb_squared_p = 0.0;  // Ljung-Box on its squares
    double arch_lm = 0.0, arch_lm_p = 0.0;
};

struct AcfPacf {
    std::vector<double> acf;   // lags 1..L
    std::vector<double> pacf;  // lags 1..L
};

struct LossReport {
    double mse = 0.0;       // mean (h - eps^2)^2
    double mad = 0.0;       // mean | |eps| - sqrt(h) |
    double medae = 0.0;     // median |h - eps^2|
    double medape = 0.0;    // median |h - eps^2| / eps^2 over eps^2 > 0
    double hmse = 0.0;      // mean (eps^2/h - 1)^2
    double hmae = 0.0;      // mean |eps^2/h - 1|
    double log_sq = 0.0;    // mean (ln(eps^2/h))^2 over eps^2 > 0
    double gmle = 0.0;      // mean (ln h + eps^2/h)
    std::size_t medape_excluded = 0;
    std::size_t log_excluded = 0;
};

namespace detail {

inline void check_series(const std::vector<double>& x, std::size_t min_n, const char* who) {
    if (x.size() < min_n)
        throw std::domain_error(std::string(who) + ": series too short");
    for (double v : x)
        if (!std::isfinite(v)) throw std::domain_error(std::string(who) + ": non-finite value");
}

// Biased (1/n) autocovariance-based autocorrelations at lags 1..L.
inline std::vector<double> autocorrelations(const std::vector<double>& x, int lags) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    if (!(c0 > 0.0)) throw std::domain_error("autocorrelations: zero variance");
    std::vector<double> rho(lags);
    for (int k = 1; k <= lags; ++k) {
        double ck = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) ck += (x[t] - mean) * (x[t + k] - mean);
        rho[k - 1] = ck / static_cast<double>(n) / c0;
    }
    return rho;
}

inline double ljung_box(const std::vector<double>& rho, std::size_t n) {
    double q = 0.0;
    for (std::size_t k = 1; k <= rho.size(); ++k)
        q += rho[k - 1] * rho[k - 1] / static_cast<double>(n - k);
    return static_cast<double>(n) * (static_cast<double>(n) + 2.0) * q;
}

}  // namespace detail

// Autocorrelations with the partial autocorrelations from the
// Durbin-Levinson recursion.
inline AcfPacf acf_pacf(const std::vector<double>& x, int lags) {
    if (lags < 1) throw std::domain_error("acf_pacf: lags must be >= 1");
    detail::check_series(x, static_cast<std::size_t>(lags) + 2, "acf_pacf");
    AcfPacf out;
    out.acf = detail::autocorrelations(x, lags);
    out.pacf.resize(lags);

    std::vector<double> phi(lags + 1, 0.0), prev(lags + 1, 0.0);
    out.pacf[0] = phi[1] = out.acf[0];
    for (int k = 2; k <= lags; ++k) {
        prev = phi;
        double num = out.acf[k - 1];
        double den = 1.0;
        for (int j = 1; j < k; ++j) {
            num -= prev[j] * out.acf[k - 1 - j];
            den -= prev[j] * out.acf[j - 1];
        }
        if (den == 0.0) throw std::domain_error("acf_pacf: Durbin-Levinson breakdown");
        phi[k] = num / den;
        out.pacf[k - 1] = phi[k];
        for (int j = 1; j < k; ++j) phi[j] = prev[j] - phi[k] * prev[k - j];
    }
    return out;
}

inline SummaryStats summary_stats(const std::vector<double>& x, int lags = 12) {
    if (lags < 1) throw std::domain_error("summary_stats: lags must be >= 1");
    const std::size_t min_n = static_cast<std::size_t>(3 * lags + 4);
    detail::check_series(x, std::max<std::size_t>(min_n, 8), "summary_stats");
    const std::size_t n = x.size();
    const double dn = static_cast<double>(n);

    SummaryStats s;
    s.n = n;
    s.lags = lags;
    s.min = *std::min_element(x.begin(), x.end());
    s.max = *std::max_element(x.begin(), x.end());
    s.range = s.max - s.min;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= dn;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    s.std_dev = std::sqrt(m2 / (dn - 1.0));
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    if (!(m2 > 0.0)) throw std::domain_error("summary_stats: zero variance");
    s.mean = mean;
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
    s.jarque_bera =
        dn / 6.0 * (s.skewness * s.skewness + 0.25 * (s.kurtosis - 3.0) * (s.kurtosis - 3.0));
    s.jarque_bera_p = chi2_sf(s.jarque_bera, 2.0);

    const auto rho = detail::autocorrelations(x, lags);
    s.lb_returns = detail::ljung_box(rho, n);
    s.lb_returns_p = chi2_sf(s.lb_returns, lags);

    std::vector<double> sq(n);
    for (std::size_t t = 0; t < n; ++t) sq[t] = x[t] * x[t];
    const auto rho_sq = detail::autocorrelations(sq, lags);
    s.lb_squared = detail::ljung_box(rho_sq, n);
    s.lb_squared_p = chi2_sf(s.lb_squared, lags);

    // ARCH-LM: squared demeaned series on its own lags, statistic n_used R^2.
    std::vector<double> e2(n);
    for (std::size_t t = 0; t < n; ++t) e2[t] = (x[t] - mean) * (x[t] - mean);
    const int p = lags + 1;
    const std::size_t rows = n - static_cast<std::size_t>(lags);
    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
    std::vector<double> row(p);
    double y_sum = 0.0, y_sq = 0.0;
    for (std::size_t t = lags; t < n; ++t) {
        row[0] = 1.0;
        for (int j = 1; j <= lags; ++j) row[j] = e2[t - j];
        const double y = e2[t];
        y_sum += y;
        y_sq += y * y;
        for (int i = 0; i < p; ++i) {
            xty[i] += row[i] * y;
            for (int j = i; j < p; ++j) xtx[i * p + j] += row[i] * row[j];
        }
    }
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < i; ++j) xtx[i * p + j] = xtx[j * p + i];
    const auto ols = detail::solve_gram_rank(xtx, xty, p);
    double explained = 0.0;  // theta' X'y recovers the model sum of squares
    for (int i = 0; i < p; ++i) explained += ols.theta[i] * xty[i];
    const double sst = y_sq - y_sum * y_sum / static_cast<double>(rows);
    const double ssr = std::max(0.0, y_sq - explained);
    const double r2 = sst > 0.0 ? std::max(0.0, 1.0 - ssr / sst) : 0.0;
    s.arch_lm = static_cast<double>(rows) * r2;
    s.arch_lm_p = chi2_sf(s.arch_lm, lags);
    return s;
}

// Forecast evaluation losses between squared residuals and variance paths.
inline LossReport loss_functions(const std::vector<double>& eps_sq,
                                 const std::vector<double>& h) {
    if (eps_sq.empty() || eps_sq.size() != h.size())
        throw std::domain_error("loss_functions: inputs must be equal-length and nonempty");
    bool any_positive = false;
    for (std::size_t t = 0; t < eps_sq.size(); ++t) {
        if (!std::isfinite(eps_sq[t]) || !std::isfinite(h[t]))
            throw std::domain_error("loss_functions: non-finite input");
        if (eps_sq[t] < 0.0) throw std::domain_error("loss_functions: negative squared residual");
        if (!(h[t] > 0.0)) throw std::domain_error("loss_functions: variance path must be positive");
        if (eps_sq[t] > 0.0) any_positive = true;
    }
    if (!any_positive)
        throw std::domain_error("loss_functions: all squared residuals are zero");

    const double dn = static_cast<double>(eps_sq.size());
    LossReport out;
    std::vector<double> abs_err;
    std::vector<double> rel_err;
    abs_err.reserve(eps_sq.size());
    for (std::size_t t = 0; t < eps_sq.size(); ++t) {
        const double diff = h[t] - eps_sq[t];
        const double ratio = eps_sq[t] / h[t];
        out.mse += diff * diff;
        out.mad += std::abs(std::sqrt(eps_sq[t]) - std::sqrt(h[t]));
        out.hmse += (ratio - 1.0) * (ratio - 1.0);
        out.hmae += std::abs(ratio - 1.0);
        out.gmle += std::log(h[t]) + ratio;
        abs_err.push_back(std::abs(diff));
        if (eps_sq[t] > 0.0) {
            rel_err.push_back(std::abs(diff) / eps_sq[t]);
            const double lr = std::log(ratio);
            out.log_sq += lr * lr;
        }
    }
    out.mse /= dn;
    out.mad /= dn;
    out.hmse /= dn;
    out.hmae /= dn;
    out.gmle /= dn;
    out.medape_excluded = eps_sq.size() - rel_err.size();
    out.log_excluded = out.medape_excluded;
    out.log_sq /= static_cast<double>(rel_err.size());

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t mid = v.size() / 2;
        return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    };
    out.medae = median(std::move(abs_err));
    out.medape = median(std::move(rel_err));
    return out;
}

}  // namespace spivar
