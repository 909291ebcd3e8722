#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

namespace gallager::quad {

struct Result {
    double value = 0.0;
    double abs_error = 0.0;  // achieved error estimate
    int intervals = 0;
    bool converged = false;
};

struct Options {
    double abs_tol = 1e-11;
    double rel_tol = 0.0;
    int max_intervals = 4000;
};

namespace detail {

// Kronrod abscissae and weights (15 point) with embedded Gauss 7 weights, QUADPACK qk15.
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double lo, hi, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(const F& f, double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += wgk[j] * sum;
        if (j % 2 == 1) gauss += wg[j / 2] * sum;
    }
    return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [lo, hi].
/// The interval with the largest error estimate is bisected until the summed
/// error estimate meets max(abs_tol, rel_tol*|I|) or the interval cap is hit.
template <class F>
Result integrate(const F& f, double lo, double hi, const Options& opt = {}) {
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gk15(f, lo, hi);
    double total = first.value;
    double error = first.error;
    heap.push(first);
    int n = 1;
    auto done = [&] { return error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
    while (!done() && n < opt.max_intervals) {
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi)) {
            // Interval no longer divisible in floating point; accept it as is.
            heap.push({worst.lo, worst.hi, worst.value, 0.0});
            error -= worst.error;
            continue;
        }
        auto left = detail::gk15(f, worst.lo, mid);
        auto right = detail::gk15(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++n;
    }
    // Re-sum to shed the drift of the running updates.
    total = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    return {total, error, n, error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))};
}

/// Integral over [a, b] of a function with square-root behaviour at both ends,
/// via x = a + (b - a) sin^2(theta). The callback receives (x, theta) so callers
/// can evaluate quantities such as log(x - a) = log(b - a) + 2 log(sin theta)
/// without cancellation.
template <class F>
Result integrate_sqrt_edges(const F& f, double a, double b, const Options& opt = {}) {
    const double width = b - a;
    auto g = [&](double theta) {
        const double sn = std::sin(theta);
        const double cs = std::cos(theta);
        const double x = a + width * sn * sn;
        return f(x, theta) * 2.0 * width * sn * cs;
    };
    return integrate(g, 0.0, std::numbers::pi / 2, opt);
}

}  // namespace gallager::quad
