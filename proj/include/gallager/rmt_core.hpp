#pragma once

// Closed-form random-matrix quantities for i.i.d. Rayleigh MIMO channels:
// Marchenko-Pastur law, ergodic rate, dispersions and the log-kernel G(x, y).
// Everything here is a pure function of its arguments.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gallager/params.hpp"
#include "gallager/quadrature.hpp"

namespace gallager::rmt {

struct MpSupport {
    double a0;  // (sqrt(beta) - 1)^2
    double b0;  // (sqrt(beta) + 1)^2
};

inline MpSupport mp_support(double beta) {
    const double sb = std::sqrt(beta);
    return {(sb - 1.0) * (sb - 1.0), (sb + 1.0) * (sb + 1.0)};
}

inline MpSupport mp_support(const ChannelParams& p) { return mp_support(p.beta()); }

/// Marchenko-Pastur density of H H^dagger eigenvalues (unit mean). Zero outside
/// the support and, for beta == 1, at the x = 0 edge.
inline double mp_density(double x, const ChannelParams& p) {
    const auto [a0, b0] = mp_support(p);
    if (!(x > a0 && x < b0) || x <= 0.0) return 0.0;
    return std::sqrt((b0 - x) * (x - a0)) / (2.0 * std::numbers::pi * x);
}

/// Positive root of sigma2 u^2 - (sigma2 + beta - 1) u - 1 = 0.
inline double ergodic_u(double beta, double sigma2) {
    const double c = sigma2 + beta - 1.0;
    return (c + std::sqrt(c * c + 4.0 * sigma2)) / (2.0 * sigma2);
}

inline double ergodic_u(const ChannelParams& p) { return ergodic_u(p.beta(), p.sigma2()); }

/// Large-N mutual information per transmit antenna (nats), noise power sigma2.
inline double ergodic_rate(double beta, double sigma2) {
    const double u = ergodic_u(beta, sigma2);
    return std::log(u) + beta * std::log1p(1.0 / (u * sigma2)) - (1.0 - 1.0 / u);
}

inline double ergodic_rate(const ChannelParams& p) { return ergodic_rate(p.beta(), p.sigma2()); }

/// G(x, y) = (1/pi) int_0^1 sqrt(t(1-t)) log(t + x) / (t + y) dt, closed form.
inline double g_kernel(double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0)) throw std::domain_error("g_kernel: arguments must be >= 0");
    const double sx = std::sqrt(x), sx1 = std::sqrt(1.0 + x);
    const double sy = std::sqrt(y), sy1 = std::sqrt(1.0 + y);
    double first = 0.0;
    if (y > 0.0) {
        const double ratio = (sx * sy1 + sy * sx1) / (sy1 + sy);
        first = -2.0 * sy * sy1 * std::log(ratio);
    }
    const double diff = sx1 - sx;
    return first + (1.0 + 2.0 * y) * std::log(0.5 * (sx1 + sx)) - 0.5 * diff * diff;
}

/// Quadrature of the defining integral of G, with t = sin^2(theta) removing the
/// square-root endpoint behaviour. Non-convergence shows in `converged`/`abs_error`.
inline quad::Result g_kernel_quadrature(double x, double y, const quad::Options& opt = {}) {
    if (!(x >= 0.0) || !(y >= 0.0))
        throw std::domain_error("g_kernel_quadrature: arguments must be >= 0");
    auto f = [&](double theta) {
        const double sn = std::sin(theta), cs = std::cos(theta);
        const double t = sn * sn;
        const double lg = x == 0.0 ? 2.0 * std::log(sn) : std::log(t + x);
        // sqrt(t(1-t)) dt = 2 sin^2 cos^2 dtheta
        return 2.0 * sn * sn * cs * cs * lg / (t + y);
    };
    auto r = quad::integrate(f, 0.0, std::numbers::pi / 2, opt);
    r.value /= std::numbers::pi;
    r.abs_error /= std::numbers::pi;
    return r;
}

/// Infinite-codelength dispersion v_inf = -log(1 - (1-u)^2 / (beta u^2)).
inline double dispersion_vinf(const ChannelParams& p) {
    const double u = ergodic_u(p);
    const double w = (1.0 - u) / u;
    return -std::log1p(-w * w / p.beta());
}

/// g0 = int x p0(x) / (x + sigma2) dx, closed form.
inline double g0(double beta, double sigma2) {
    const auto [a0, b0] = mp_support(beta);
    const double d = std::sqrt(sigma2 + b0) - std::sqrt(sigma2 + a0);
    return 0.25 * d * d;
}

inline double g0(const ChannelParams& p) { return g0(p.beta(), p.sigma2()); }

/// Finite-blocklength dispersion correction. Peak power: 2 g0 - g0^2; for
/// unconstrained Gaussian inputs the -g0^2 correction is absent.
inline double delta_v(const ChannelParams& p, Mode mode = Mode::PeakPower) {
    const double g = g0(p);
    return uses_power_constraint(mode) ? 2.0 * g - g * g : 2.0 * g;
}

/// v_alpha = v_inf + delta_v / alpha (uses the per-block alpha).
inline double v_alpha(const ChannelParams& p, Mode mode = Mode::PeakPower) {
    return dispersion_vinf(p) + delta_v(p, mode) / p.alpha_per_block();
}

struct ThetaBounds {
    double theta_minus;
    double theta_plus;
    double v_alpha;  // theta_plus / alpha, kept so the two agree bit for bit

    double theta_minus_over_alpha(double alpha) const { return theta_minus / alpha; }
    double theta_plus_over_alpha() const { return v_alpha; }
};

/// Lower/upper Gaussian dispersions of the induced-ergodicity analysis;
/// theta_plus = alpha v_alpha. theta_minus is reported as computed, never clamped.
inline ThetaBounds theta_bounds(const ChannelParams& p) {
    const auto [a0, b0] = mp_support(p);
    const double beta = p.beta(), s2 = p.sigma2(), alpha = p.alpha_per_block();
    const double corr = 0.5 * (beta + 1.0 - (s2 * (beta + 1.0) + (beta - 1.0) * (beta - 1.0)) /
                                                std::sqrt((s2 + a0) * (s2 + b0)));
    const double v = v_alpha(p);
    return {alpha * dispersion_vinf(p) + corr, alpha * v, v};
}

}  // namespace gallager::rmt
