#pragma once

// Derivative-free and quasi-Newton minimizers over unconstrained working
// coordinates.  Both report how many of their own iterations they spent and
// feed every accepted improvement to an observer so callers can track the
// incumbent objective.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace spivar::detail {

using Objective = std::function<double(const std::vector<double>&)>;
using ImproveHook = std::function<void(double)>;

struct StageResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
};

// Standard Nelder-Mead simplex (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5) started from a point-and-offsets simplex.
inline StageResult nelder_mead(const Objective& obj, std::vector<double> x0, double f0,
                               int max_iter, const ImproveHook& improved) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    fv[0] = f0;
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += 0.25 * (1.0 + std::abs(x0[i])) * 0.4;
        fv[i + 1] = obj(pts[i + 1]);
    }
    std::vector<std::size_t> idx(n + 1);
    double best_seen = f0;

    StageResult out;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&fv](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t lo = idx[0], hi = idx[n], second_hi = idx[n - 1];
        if (fv[lo] < best_seen) {
            best_seen = fv[lo];
            if (improved) improved(best_seen);
        }
        const double spread = std::abs(fv[hi] - fv[lo]);
        if (spread <= 1e-12 * (1.0 + std::abs(fv[lo]))) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == hi) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&centroid, &pts, hi, n](double coef) {
            std::vector<double> p(n);
            for (std::size_t k = 0; k < n; ++k)
                p[k] = centroid[k] + coef * (centroid[k] - pts[hi][k]);
            return p;
        };
        std::vector<double> refl = blend(1.0);
        const double f_refl = obj(refl);
        if (f_refl < fv[lo]) {
            std::vector<double> expa = blend(2.0);
            const double f_expa = obj(expa);
            if (f_expa < f_refl) {
                pts[hi] = std::move(expa);
                fv[hi] = f_expa;
            } else {
                pts[hi] = std::move(refl);
                fv[hi] = f_refl;
            }
            continue;
        }
        if (f_refl < fv[second_hi]) {
            pts[hi] = std::move(refl);
            fv[hi] = f_refl;
            continue;
        }
        std::vector<double> contr = blend(f_refl < fv[hi] ? 0.5 : -0.5);
        const double f_contr = obj(contr);
        if (f_contr < std::min(f_refl, fv[hi])) {
            pts[hi] = std::move(contr);
            fv[hi] = f_contr;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {  // shrink toward the best point
            if (i == lo) continue;
            for (std::size_t k = 0; k < n; ++k)
                pts[i][k] = pts[lo][k] + 0.5 * (pts[i][k] - pts[lo][k]);
            fv[i] = obj(pts[i]);
        }
    }
    std::size_t lo = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[lo]) lo = i;
    if (fv[lo] < best_seen && improved) improved(fv[lo]);
    out.x = pts[lo];
    out.f = fv[lo];
    return out;
}

inline std::vector<double> fd_gradient(const Objective& obj, const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> g(n);
    std::vector<double> xp = x;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = 1e-6 * (1.0 + std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = obj(xp);
        xp[i] = x[i] - h;
        const double fm = obj(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// BFGS with an Armijo backtracking line search on finite-difference
// gradients.  Stops on a small gradient, a failed line search, or a string
// of negligible decreases.
inline StageResult bfgs(const Objective& obj, std::vector<double> x, double fx, int max_iter,
                        const ImproveHook& improved) {
    const std::size_t n = x.size();
    std::vector<double> h(n * n, 0.0);  // inverse-Hessian approximation
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
    std::vector<double> g = fd_gradient(obj, x);

    StageResult out;
    int stall = 0;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax <= 1e-7 * (1.0 + std::abs(fx))) break;

        std::vector<double> dir(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) dir[i] -= h[i * n + k] * g[k];
        double slope = dot(dir, g);
        if (!(slope < 0.0)) {  // reset to steepest descent
            std::fill(h.begin(), h.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            slope = dot(dir, g);
            if (!(slope < 0.0)) break;
        }

        double step = 1.0;
        std::vector<double> xn(n);
        double fn = fx;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * dir[i];
            fn = obj(xn);
            if (fn <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> gn = fd_gradient(obj, xn);
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const double sy = dot(s, y);
        double snorm = 0.0, ynorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            snorm += s[i] * s[i];
            ynorm += y[i] * y[i];
        }
        if (sy > 1e-10 * std::sqrt(snorm * ynorm)) {
            const double rho = 1.0 / sy;
            std::vector<double> hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k) hy[i] += h[i * n + k] * y[k];
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < n; ++k) {
                    h[i * n + k] += (1.0 + rho * yhy) * rho * s[i] * s[k] -
                                    rho * (s[i] * hy[k] + hy[i] * s[k]);
                }
            }
        }
        const double gain = fx - fn;
        x = std::move(xn);
        fx = fn;
        g = std::move(gn);
        if (improved) improved(fx);
        if (gain <= 1e-11 * (1.0 + std::abs(fx))) {
            if (++stall >= 3) break;
        } else {
            stall = 0;
        }
    }
    out.x = std::move(x);
    out.f = fx;
    return out;
}

}  // namespace spivar::detail
