#pragma once

// Dense helpers sized for the small systems that show up here: 8x8 Hessians
// and regression Gram matrices with a dozen columns.  Matrices are row-major
// std::vector<double>.

#include <cmath>
#include <numeric>
#include <vector>

#include "../errors.hpp"

namespace spivar::detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Gauss-Jordan inverse with partial pivoting.  cond_proxy receives the ratio
// of the largest to smallest absolute pivot as a cheap conditioning estimate.
inline std::vector<double> invert(std::vector<double> a, int n, double& cond_proxy) {
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    double min_piv = std::numeric_limits<double>::infinity();
    double max_piv = 0.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        const double pval = std::abs(a[piv * n + col]);
        min_piv = std::min(min_piv, pval);
        max_piv = std::max(max_piv, pval);
        if (pval == 0.0 || !std::isfinite(pval)) {
            cond_proxy = std::numeric_limits<double>::infinity();
            throw ConvergenceError("matrix inversion failed: zero pivot");
        }
        if (piv != col) {
            for (int k = 0; k < n; ++k) {
                std::swap(a[piv * n + k], a[col * n + k]);
                std::swap(inv[piv * n + k], inv[col * n + k]);
            }
        }
        const double d = 1.0 / a[col * n + col];
        for (int k = 0; k < n; ++k) {
            a[col * n + k] *= d;
            inv[col * n + k] *= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (int k = 0; k < n; ++k) {
                a[r * n + k] -= f * a[col * n + k];
                inv[r * n + k] -= f * inv[col * n + k];
            }
        }
    }
    cond_proxy = max_piv / min_piv;
    return inv;
}

// Solves the normal equations (X'X) theta = X'y with symmetric diagonal
// pivoting, dropping columns whose pivot falls below rel_tol times the
// largest initial diagonal.  Dropped coefficients are zero; rank is the
// number of retained columns.  This keeps collinear regressor sets (e.g. a
// constant VaR column duplicating the intercept) well defined.
struct RankSolve {
    std::vector<double> theta;
    int rank = 0;
};

inline RankSolve solve_gram_rank(std::vector<double> a, std::vector<double> b, int p,
                                 double rel_tol = 1e-10) {
    RankSolve out;
    out.theta.assign(p, 0.0);
    double max_diag0 = 0.0;
    for (int i = 0; i < p; ++i) max_diag0 = std::max(max_diag0, a[i * p + i]);
    if (!(max_diag0 > 0.0)) return out;

    std::vector<char> eliminated(p, 0);
    std::vector<int> order;
    order.reserve(p);
    for (int step = 0; step < p; ++step) {
        int j = -1;
        for (int k = 0; k < p; ++k)
            if (!eliminated[k] && (j < 0 || a[k * p + k] > a[j * p + j])) j = k;
        if (j < 0 || a[j * p + j] <= rel_tol * max_diag0) break;
        eliminated[j] = 1;
        order.push_back(j);
        const double d = a[j * p + j];
        for (int r = 0; r < p; ++r) {
            if (eliminated[r]) continue;
            const double f = a[r * p + j] / d;
            if (f == 0.0) continue;
            for (int k = 0; k < p; ++k) a[r * p + k] -= f * a[j * p + k];
            b[r] -= f * b[j];
        }
    }
    out.rank = static_cast<int>(order.size());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int j = *it;
        double acc = b[j];
        for (int k = 0; k < p; ++k)
            if (k != j) acc -= a[j * p + k] * out.theta[k];
        out.theta[j] = acc / a[j * p + j];
    }
    return out;
}

}  // namespace spivar::detail
