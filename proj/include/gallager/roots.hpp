#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "gallager/params.hpp"

namespace gallager::roots {

struct BracketOptions {
    double x_tol = 0.0;     // absolute bracket width at which to stop (0: run to float resolution)
    double f_tol = 0.0;     // stop as soon as |f| <= f_tol
    int max_iter = 200;
    bool check_monotone = false;  // values inside the bracket must lie between the end values
};

struct Root {
    double x;
    double fx;
    int iterations;
};

/// Root of f on [lo, hi] given f(lo) and f(hi) of opposite sign (or one of them zero).
/// Brent's method: inverse quadratic / secant steps are accepted only while they stay
/// inside the shrinking bracket and shrink it fast enough; otherwise the step bisects.
/// The bracket is maintained throughout, so the result is at least as reliable as bisection.
template <class F>
Root find_root(const F& f, double lo, double hi, double flo, double fhi, const BracketOptions& opt = {}) {
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if ((flo > 0.0) == (fhi > 0.0))
        throw SolverError(SolverError::Kind::BracketFailure,
                          "find_root: f has equal signs at both bracket ends");
    const double slack = 1e-12 * std::abs(flo - fhi);
    const double f_upper = std::max(flo, fhi) + slack, f_lower = std::min(flo, fhi) - slack;

    double a = lo, b = hi, fa = flo, fb = fhi;
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 1; it <= opt.max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * opt.x_tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0 || std::abs(fb) <= opt.f_tol) return {b, fb, it};
        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if (opt.check_monotone && (fb > f_upper || fb < f_lower))
            throw SolverError(SolverError::Kind::NonMonotone,
                              "find_root: function value left the bracket range at x = " + std::to_string(b));
    }
    throw SolverError(SolverError::Kind::NoConvergence, "find_root: iteration budget exhausted");
}

template <class F>
Root find_root(const F& f, double lo, double hi, const BracketOptions& opt = {}) {
    return find_root(f, lo, hi, f(lo), f(hi), opt);
}

struct Maximum {
    double x;
    double fx;
};

/// Golden-section search for the maximum of a quasi-concave f on [lo, hi].
/// The end points are compared too, so boundary maxima are returned exactly.
template <class F>
Maximum golden_max(const F& f, double lo, double hi, double x_tol = 1e-10) {
    constexpr double inv_phi = 0.6180339887498948482;  // 1/golden ratio
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > x_tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    Maximum best = f1 >= f2 ? Maximum{x1, f1} : Maximum{x2, f2};
    for (double x : {lo, hi}) {
        const double fx = f(x);
        if (fx > best.fx) best = {x, fx};
    }
    return best;
}

}  // namespace gallager::roots
