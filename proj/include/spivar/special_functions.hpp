#pragma once

// Numerical building blocks: complex log-gamma, the squared modulus ratio
// |Gamma(x+iy)/Gamma(x)|^2, adaptive Gauss-Kronrod quadrature (real or
// complex integrands, finite or infinite intervals), the Gauss
// hypergeometric function 2F1 on the unit disk, and chi-square / normal
// tail helpers used by the test statistics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <vector>

#include "errors.hpp"

namespace spivar {

using Complex = std::complex<double>;

namespace detail {

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

inline bool is_finite(const Complex& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Complex log-gamma (Lanczos, g = 7). Principal branch is continuous on
// Re(z) > 0, which covers every internal use; the reflection formula extends
// it to the rest of the plane minus the poles.
// ---------------------------------------------------------------------------
inline Complex log_gamma(Complex z) {
    if (!detail::is_finite(z)) throw std::invalid_argument("log_gamma: non-finite argument");
    static constexpr double kCoef[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // ln(2*pi)/2
    if (z.real() < 0.5) {
        if (z.imag() == 0.0 && z.real() == std::round(z.real()))
            throw std::domain_error("log_gamma: pole at nonpositive integer");
        // Reflection: ln Gamma(z) = ln pi - ln sin(pi z) - ln Gamma(1 - z).
        return std::log(M_PI) - std::log(std::sin(M_PI * z)) - log_gamma(1.0 - z);
    }
    const Complex zm1 = z - 1.0;
    Complex acc = kCoef[0];
    for (int k = 1; k < 9; ++k) acc += kCoef[k] / (zm1 + static_cast<double>(k));
    const Complex t = zm1 + 7.5;
    return kHalfLogTwoPi + (zm1 + 0.5) * std::log(t) - t + std::log(acc);
}

// ---------------------------------------------------------------------------
// log |Gamma(x+iy)/Gamma(x)|^2 for x > 0, evaluated through the downward
// recursion of the infinite product prod_k (1 + y^2/(x+k)^2)^{-1}.  The
// product is truncated once (y/(x+n))^2 < tol/2 and the dropped tail is
// restored analytically with an Euler-Maclaurin estimate of the polygamma
// sums, so the cost grows linearly in |y| while the accuracy stays near
// machine precision.
// ---------------------------------------------------------------------------
inline double log_gamma_ratio_sq(double x, double y, double tol = 1e-12) {
    detail::require_finite(x, "gamma_ratio_sq: x");
    detail::require_finite(y, "gamma_ratio_sq: y");
    if (x <= 0.0) throw std::domain_error("gamma_ratio_sq: requires x > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("gamma_ratio_sq: tol must be positive");
    if (y == 0.0) return 0.0;

    const double y2 = y * y;
    const double n_rule = std::ceil(std::abs(y) * std::sqrt(2.0 / tol) - x);
    const std::int64_t n_terms =
        std::clamp<std::int64_t>(static_cast<std::int64_t>(n_rule), 50, 50000000);

    // Extended-precision accumulation keeps the systematic rounding of the
    // (possibly multi-million-term) product below the requested tolerance.
    long double log_acc = 0.0L;
    long double prod = 1.0L;
    const long double y2l = static_cast<long double>(y) * y;
    for (std::int64_t k = 0; k < n_terms; ++k) {
        const long double w = static_cast<long double>(x) + static_cast<long double>(k);
        prod *= w * w / (w * w + y2l);
        if (prod < 1e-250L) {  // renormalise to dodge underflow for large |y|
            log_acc += std::log(prod);
            prod = 1.0L;
        }
    }
    log_acc += std::log(prod);

    // Tail of -sum_{k>=N} ln(1 + y^2/(x+k)^2) expanded in polygamma sums:
    //   -y^2 psi_1(w) + y^4/2 * psi_3(w)/6 - y^6/3 * psi_5(w)/120,  w = x+N,
    // each polygamma replaced by its asymptotic series.
    const double w = x + static_cast<double>(n_terms);
    const double iw = 1.0 / w;
    const double iw2 = iw * iw;
    const double s1 = iw * (1.0 + iw * (0.5 + iw * (1.0 / 6.0 - iw2 / 30.0)));
    const double s2 = iw * iw2 * (1.0 / 3.0 + iw * (0.5 + iw / 3.0));
    const double s3 = iw * iw2 * iw2 * 0.2;
    return static_cast<double>(log_acc) - y2 * s1 + 0.5 * y2 * y2 * s2 -
           (y2 * y2 * y2 / 3.0) * s3;
}

// |Gamma(x+iy)/Gamma(x)|^2; strictly in (0, 1] and even in y.
inline double gamma_ratio_sq(double x, double y, double tol = 1e-12) {
    return std::exp(log_gamma_ratio_sq(x, y, tol));
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod 15(7) quadrature.  Works for real or complex valued
// integrands; infinite endpoints are mapped onto [0,1) via x = t/(1-t), with
// doubly infinite ranges split at zero.  Refinement always bisects the
// segment carrying the largest error estimate; running out of the segment
// budget raises ConvergenceError.
// ---------------------------------------------------------------------------
namespace detail {

// Kronrod 15 abscissae/weights on [-1,1] and the embedded Gauss-7 weights.
constexpr double kKronrodX[15] = {
    -0.9914553711208126, -0.9491079123427585, -0.8648644233597691,
    -0.7415311855993944, -0.5860872354676911, -0.4058451513773972,
    -0.2077849550078985, 0.0,                 0.2077849550078985,
    0.4058451513773972,  0.5860872354676911,  0.7415311855993944,
    0.8648644233597691,  0.9491079123427585,  0.9914553711208126};
constexpr double kKronrodW[15] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502,
    0.1406532597155259,  0.1690047266392679,  0.1903505780647854,
    0.2044329400752989,  0.2094821410847278,  0.2044329400752989,
    0.1903505780647854,  0.1690047266392679,  0.1406532597155259,
    0.1047900103222502,  0.06309209262997855, 0.02293532201052922};
// Gauss-7 weights aligned with kKronrodX indices 1,3,5,7,9,11,13.
constexpr double kGaussW[7] = {0.1294849661688697, 0.2797053914892767,
                               0.3818300505051189, 0.4179591836734694,
                               0.3818300505051189, 0.2797053914892767,
                               0.1294849661688697};

template <class V>
struct QuadSegment {
    double a, b;
    V value;
    double error;
};

template <class F, class V>
QuadSegment<V> gk15(F& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    V k15{};
    V g7{};
    for (int i = 0; i < 15; ++i) {
        const V fx = f(mid + half * kKronrodX[i]);
        k15 += kKronrodW[i] * fx;
        if (i % 2 == 1) g7 += kGaussW[i / 2] * fx;
    }
    k15 *= half;
    g7 *= half;
    double err = std::abs(k15 - g7);
    // Overflowed or invalid evaluations count as infinitely uncertain so the
    // segment keeps getting refined instead of silently passing the check.
    if (std::isnan(err) || !std::isfinite(std::abs(k15)))
        err = std::numeric_limits<double>::infinity();
    return {a, b, k15, err};
}

template <class F>
auto integrate_finite(F& f, double lo, double hi, double tol) {
    using V = std::remove_cvref_t<decltype(f(lo))>;
    constexpr std::size_t kMaxSegments = 4000;
    std::vector<QuadSegment<V>> segments;
    segments.reserve(256);
    segments.push_back(gk15<F, V>(f, lo, hi));
    for (;;) {
        V total{};
        double err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            total += segments[i].value;
            err += segments[i].error;
            if (segments[i].error > segments[worst].error) worst = i;
        }
        if (std::isfinite(err) && std::isfinite(std::abs(total)) &&
            err <= tol * std::max(1.0, std::abs(total)))
            return total;
        if (segments.size() >= kMaxSegments)
            throw ConvergenceError("adaptive_quad: tolerance not reached within segment budget");
        const QuadSegment<V> seg = segments[worst];
        const double mid = 0.5 * (seg.a + seg.b);
        if (!(mid > seg.a && mid < seg.b))
            throw ConvergenceError("adaptive_quad: interval no longer bisectable");
        segments[worst] = gk15<F, V>(f, seg.a, mid);
        segments.push_back(gk15<F, V>(f, mid, seg.b));
    }
}

}  // namespace detail

template <class F>
auto adaptive_quad(F&& f, double lo, double hi, double tol = 1e-10) {
    using V = std::remove_cvref_t<decltype(f(0.0))>;
    if (std::isnan(lo) || std::isnan(hi)) throw std::invalid_argument("adaptive_quad: NaN endpoint");
    if (!(lo < hi)) throw std::invalid_argument("adaptive_quad: requires lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("adaptive_quad: tol must be positive");

    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    if (!lo_inf && !hi_inf) {
        return detail::integrate_finite(f, lo, hi, tol);
    }
    // Deep refinement can push a node onto s = 1 (x overflows); integrable
    // integrands have vanished there, so such evaluations count as zero.
    auto mapped = [&f](double anchor, double sign, double s) -> V {
        const double d = 1.0 - s;
        const double x = anchor + sign * (s / d);
        if (!(d > 0.0) || !std::isfinite(x)) return V{};
        const V v = f(x);
        if (std::abs(v) == 0.0) return V{};
        return v * (1.0 / (d * d));
    };
    if (lo_inf && hi_inf) {
        auto left = [&mapped](double s) { return mapped(0.0, -1.0, s); };
        auto right = [&mapped](double s) { return mapped(0.0, 1.0, s); };
        const V a = detail::integrate_finite(left, 0.0, 1.0, tol / 2);
        const V b = detail::integrate_finite(right, 0.0, 1.0, tol / 2);
        return V(a + b);
    }
    if (hi_inf) {
        auto g = [&mapped, lo](double s) { return mapped(lo, 1.0, s); };
        return detail::integrate_finite(g, 0.0, 1.0, tol);
    }
    auto g = [&mapped, hi](double s) { return mapped(hi, -1.0, s); };
    return detail::integrate_finite(g, 0.0, 1.0, tol);
}

// ---------------------------------------------------------------------------
// Gauss hypergeometric 2F1(a, b; c; w) for |w| <= 1 off the cut [1, inf).
// Power series inside |w| <= 0.9; Euler's integral representation
//   Gamma(c)/(Gamma(b)Gamma(c-b)) * int_0^1 t^{b-1}(1-t)^{c-b-1}(1-wt)^{-a} dt
// when Re(c) > Re(b) > 0 (trying the a<->b symmetry as well); otherwise the
// series is pushed with a large term cap.  w = 1 is admitted only when the
// Euler route applies and Re(c-a-b) > 0, where the integral stays convergent.
// ---------------------------------------------------------------------------
namespace detail {

inline bool is_nonpositive_integer(const Complex& z) {
    if (z.imag() != 0.0) return false;
    const double r = std::round(z.real());
    return r <= 0.0 && std::abs(z.real() - r) < 1e-12 * std::max(1.0, std::abs(z.real()));
}

inline Complex hyp2f1_series(Complex a, Complex b, Complex c, Complex w, double tol,
                             std::int64_t max_terms) {
    Complex sum = 1.0;
    Complex term = 1.0;
    // The geometric tail beyond the last kept term is roughly
    // |term| * r / (1 - r), so tighten the per-term cutoff accordingly.
    const double r = std::min(std::abs(w), 0.999);
    const double cutoff = tol * 0.5 * (1.0 - r);
    int small_streak = 0;
    for (std::int64_t n = 0; n < max_terms; ++n) {
        const double dn = static_cast<double>(n);
        const Complex numer = (a + dn) * (b + dn);
        if (numer == Complex(0.0, 0.0)) return sum;  // terminating series
        term *= numer / ((c + dn) * (dn + 1.0)) * w;
        sum += term;
        if (!is_finite(sum)) throw ConvergenceError("hyp2f1: series overflowed");
        if (std::abs(term) <= cutoff * (std::abs(sum) + 1e-300)) {
            if (++small_streak >= 2 && n >= 4) return sum;
        } else {
            small_streak = 0;
        }
    }
    throw ConvergenceError("hyp2f1: series did not converge within term budget");
}

inline bool euler_admissible(const Complex& b, const Complex& c) {
    return c.real() > b.real() && b.real() > 0.0;
}

inline Complex hyp2f1_euler(Complex a, Complex b, Complex c, Complex w, double tol) {
    const Complex prefactor = std::exp(log_gamma(c) - log_gamma(b) - log_gamma(c - b));
    auto integrand = [a, b, c, w](double t) -> Complex {
        // Endpoint powers are handled by the quadrature keeping nodes interior.
        const Complex p1 = (b - 1.0) * std::log(t);
        const Complex p2 = (c - b - 1.0) * std::log1p(-t);
        const Complex p3 = -a * std::log(1.0 - w * t);
        return std::exp(p1 + p2 + p3);
    };
    const Complex integral =
        adaptive_quad(integrand, 0.0, 1.0, tol / std::max(1.0, std::abs(prefactor)));
    return prefactor * integral;
}

}  // namespace detail

inline Complex hyp2f1(Complex a, Complex b, Complex c, Complex w, double tol = 1e-10) {
    using detail::is_nonpositive_integer;
    if (!detail::is_finite(a) || !detail::is_finite(b) || !detail::is_finite(c) ||
        !detail::is_finite(w))
        throw std::invalid_argument("hyp2f1: non-finite argument");
    if (!(tol > 0.0)) throw std::invalid_argument("hyp2f1: tol must be positive");
    if (w == Complex(0.0, 0.0)) return Complex(1.0, 0.0);

    const bool a_terminates = is_nonpositive_integer(a);
    const bool b_terminates = is_nonpositive_integer(b);
    if (is_nonpositive_integer(c)) {
        // Poles of (c)_n unless the numerator terminates first.
        const double c_deg = -std::round(c.real());
        const double num_deg =
            std::min(a_terminates ? -std::round(a.real()) : std::numeric_limits<double>::infinity(),
                     b_terminates ? -std::round(b.real()) : std::numeric_limits<double>::infinity());
        if (!(num_deg <= c_deg))
            throw std::domain_error("hyp2f1: c is a nonpositive integer (pole)");
    }
    if (a_terminates || b_terminates) {
        const double deg = std::min(a_terminates ? -std::round(a.real()) : 1e18,
                                    b_terminates ? -std::round(b.real()) : 1e18);
        return detail::hyp2f1_series(a, b, c, w, tol, static_cast<std::int64_t>(deg) + 2);
    }

    const double r = std::abs(w);
    if (w.imag() == 0.0 && w.real() >= 1.0) {
        if (w.real() > 1.0) throw std::domain_error("hyp2f1: w on the branch cut [1, inf)");
        if ((c - a - b).real() <= 0.0)
            throw std::domain_error("hyp2f1: divergent at w = 1 (requires Re(c-a-b) > 0)");
        if (detail::euler_admissible(b, c)) return detail::hyp2f1_euler(a, b, c, w, tol);
        if (detail::euler_admissible(a, c)) return detail::hyp2f1_euler(b, a, c, w, tol);
        throw std::domain_error("hyp2f1: w = 1 outside the supported parameter range");
    }
    if (r > 1.0) throw std::domain_error("hyp2f1: |w| > 1 is outside the supported region");

    if (r <= 0.9) return detail::hyp2f1_series(a, b, c, w, tol, 200000);
    if (detail::euler_admissible(b, c)) return detail::hyp2f1_euler(a, b, c, w, tol);
    if (detail::euler_admissible(a, c)) return detail::hyp2f1_euler(b, a, c, w, tol);
    return detail::hyp2f1_series(a, b, c, w, tol, 2500000);
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma (series + continued fraction), chi-square
// upper tail and standard normal helpers.
// ---------------------------------------------------------------------------
namespace detail {

inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw ConvergenceError("regularized gamma: series did not converge");
}

inline double gamma_q_contfrac(double a, double x) {
    // Lentz's algorithm for the continued fraction of Q(a, x).
    constexpr double kTiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw ConvergenceError("regularized gamma: continued fraction did not converge");
}

}  // namespace detail

// P(a, x): regularized lower incomplete gamma.
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || !std::isfinite(x))
        throw std::domain_error("regularized_gamma_p: requires a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

// Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || !std::isfinite(x))
        throw std::domain_error("regularized_gamma_q: requires a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

// Upper tail of a chi-square with dof degrees of freedom.
inline double chi2_sf(double x, double dof) {
    if (!(dof > 0.0)) throw std::domain_error("chi2_sf: dof must be positive");
    if (!(x >= 0.0)) throw std::domain_error("chi2_sf: x must be nonnegative");
    return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double normal_sf(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

// Inverse standard normal CDF: Acklam's rational approximation polished with
// one Halley step against erfc, accurate to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: requires 0 < p < 1");
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

}  // namespace spivar
