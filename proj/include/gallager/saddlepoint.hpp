#pragma once

// Saddle point of the large-N Gallager functional at fixed rho: support edges
// (a, b) of the tilted eigenvalue density p*, the power-constraint parameter s,
// the rate map rbar(rho) and its inverse rho(r).
//
// All solves run at Q = 1 with alpha replaced by alpha / Q.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "gallager/params.hpp"
#include "gallager/quadrature.hpp"
#include "gallager/rmt_core.hpp"
#include "gallager/roots.hpp"

namespace gallager::saddle {

struct Residuals {
    double edge = 0.0;           // p*(a) = 0 condition (0 on the a = 0 branch)
    double normalization = 0.0;  // unit mass condition
    double s_equation = 0.0;     // s-stationarity (0 in average-power mode)
};

struct SaddleSolution {
    double rho = 0.0;
    double s = 0.0;
    double a = 0.0;
    double b = 0.0;
    double z = 0.0;  // (1 + rho)(1 - s) sigma2
    Residuals residuals;
    Mode mode = Mode::PeakPower;
    bool zero_lower_edge = false;  // a pinned to 0 (beta == 1, or the near-1 fallback)
    int s_iterations = 0;
};

inline constexpr double kResidualTol = 1e-10;

/// Threshold below which a computed lower edge is replaced by the a = 0 branch
/// when beta is within kNearSquare of 1.
inline constexpr double kTinyLowerEdge = 1e-12;
inline constexpr double kNearSquare = 1e-6;

inline double z_of(double rho, double s, const ChannelParams& p) {
    return (1.0 + rho) * (1.0 - s) * p.sigma2();
}

namespace detail {

inline double kappa(double rho, double a, double b, double z, double alpha) {
    return rho * alpha / std::sqrt((z + a) * (z + b));
}

inline double edge_lhs(double a, double b, double rho, double z, double beta, double alpha) {
    return (beta - 1.0) / std::sqrt(a * b) - kappa(rho, a, b, z, alpha);
}

}  // namespace detail

/// Edge-continuity residual (beta-1)/sqrt(ab) - rho alpha / sqrt((z+a)(z+b)) - 1.
inline double edge_residual(double a, double b, double rho, double z, const ChannelParams& p) {
    return detail::edge_lhs(a, b, rho, z, p.beta(), p.alpha_per_block()) - 1.0;
}

/// Normalization residual a + b + 2 rho alpha - 2(beta+1) - 2 rho alpha z / sqrt((a+z)(b+z)).
inline double normalization_residual(double a, double b, double rho, double z, const ChannelParams& p) {
    const double ra = rho * p.alpha_per_block();
    return a + b + 2.0 * ra - 2.0 * (p.beta() + 1.0) - 2.0 * ra * z / std::sqrt((a + z) * (b + z));
}

/// rho/(1+rho) * int x p*(x)/(x+z) dx in closed form: the stationary s for given (rho, z, a, b).
inline double s_stationary(double rho, double a, double b, double z, const ChannelParams& p) {
    const double d = std::sqrt(z + b) - std::sqrt(z + a);
    const double tilt = 1.0 + rho * p.alpha_per_block() * z / ((z + a) * (z + b));
    return rho / (4.0 * (1.0 + rho)) * d * d * tilt;
}

/// Smallest a in (0, b) solving the edge-continuity equation for this b, or nullopt
/// when no root exists (b below the feasible range). The left-hand side is
/// decreasing on (0, a_turn), so the root is bracketed in log a on that interval.
inline std::optional<double> edge_lower(double b, double rho, double z, const ChannelParams& p) {
    const double beta = p.beta(), alpha = p.alpha_per_block();
    if (beta == 1.0) return 0.0;
    double hi = b;
    const double ra = rho * alpha;
    if (ra > 0.0) {
        const double k = ra * std::sqrt(b) / ((beta - 1.0) * std::sqrt(z + b));
        const double k23 = std::cbrt(k * k);
        if (k23 > 1.0) hi = std::min(hi, z / (k23 - 1.0));
    }
    auto f = [&](double log_a) { return detail::edge_lhs(std::exp(log_a), b, rho, z, beta, alpha) - 1.0; };
    const double log_hi = std::log(hi);
    const double f_hi = f(log_hi);
    if (f_hi > 0.0) return std::nullopt;
    const double log_lo = std::log(1e-300);
    const double f_lo = f(log_lo);
    if (!(f_lo > 0.0)) return std::exp(log_lo);
    auto root = roots::find_root(f, log_lo, log_hi, f_lo, f_hi);
    return std::exp(root.x);
}

/// Unit-mass functional n(b): mass of the density that vanishes at b, with a = a(b)
/// from the edge equation (a = 0 on the square branch). nullopt when a(b) does not exist.
inline std::optional<double> normalization_mass(double b, double rho, double z, const ChannelParams& p,
                                                bool zero_lower_edge = false) {
    const double beta = p.beta(), ra = rho * p.alpha_per_block();
    double a = 0.0;
    if (!zero_lower_edge && beta != 1.0) {
        auto ea = edge_lower(b, rho, z, p);
        if (!ea) return std::nullopt;
        a = *ea;
    }
    return 0.5 * (0.5 * (b - a) + (beta - 1.0) * (std::sqrt(a / b) - 1.0) +
                  ra * (1.0 - std::sqrt((z + a) / (z + b))));
}

struct Endpoints {
    double a;
    double b;
    bool zero_lower_edge;
};

/// Initial b bracket [a0/4, 4 b0 + 4 alpha rho], widened geometrically until n(b) - 1 changes sign.
inline std::pair<double, double> b_bracket(double rho, double z, const ChannelParams& p, bool zero_lower_edge) {
    const auto mp = rmt::mp_support(p);
    auto excess = [&](double b) {
        auto n = normalization_mass(b, rho, z, p, zero_lower_edge);
        return n ? *n - 1.0 : -1.0;
    };
    double lo = std::max(mp.a0 / 4.0, 1e-12);
    double hi = 4.0 * mp.b0 + 4.0 * rho * p.alpha_per_block();
    for (int i = 0; excess(lo) >= 0.0; ++i) {
        if (i > 200) throw SolverError(SolverError::Kind::BracketFailure, "b bracket: lower end not found");
        lo *= 0.25;
    }
    for (int i = 0; excess(hi) <= 0.0; ++i) {
        if (i > 200) throw SolverError(SolverError::Kind::BracketFailure, "b bracket: upper end not found");
        hi *= 2.0;
    }
    return {lo, hi};
}

/// Solve the edge-continuity and normalization equations for (a, b) at given (rho, s).
/// Nested scheme: root in b of n(b) = 1, where each n(b) evaluation solves for a(b).
inline Endpoints solve_endpoints(double rho, double s, const ChannelParams& p) {
    if (!(rho >= 0.0)) throw InvalidParams("solve_endpoints: rho must be >= 0");
    if (!(s >= 0.0 && s < 1.0)) throw InvalidParams("solve_endpoints: s must be in [0, 1)");
    const double z = z_of(rho, s, p);

    auto solve = [&](bool zero_lower_edge) {
        auto [lo, hi] = b_bracket(rho, z, p, zero_lower_edge);
        auto excess = [&](double b) {
            auto n = normalization_mass(b, rho, z, p, zero_lower_edge);
            return n ? *n - 1.0 : -1.0;
        };
        auto root = roots::find_root(excess, lo, hi);
        const double b = root.x;
        double a = 0.0;
        if (!zero_lower_edge && p.beta() != 1.0) {
            auto ea = edge_lower(b, rho, z, p);
            if (!ea) throw SolverError(SolverError::Kind::NoConvergence, "solve_endpoints: a(b) lost at the root");
            a = *ea;
        }
        return Endpoints{a, b, zero_lower_edge || p.beta() == 1.0};
    };

    auto ends = solve(false);
    if (!ends.zero_lower_edge && ends.a < kTinyLowerEdge && p.beta() < 1.0 + kNearSquare) ends = solve(true);
    return ends;
}

inline Residuals residuals_of(const SaddleSolution& sol, const ChannelParams& p) {
    Residuals r;
    r.edge = sol.zero_lower_edge ? 0.0 : edge_residual(sol.a, sol.b, sol.rho, sol.z, p);
    r.normalization = normalization_residual(sol.a, sol.b, sol.rho, sol.z, p);
    r.s_equation = uses_power_constraint(sol.mode) ? sol.s - s_stationary(sol.rho, sol.a, sol.b, sol.z, p) : 0.0;
    return r;
}

struct SaddleOptions {
    double damping = 0.5;     // s <- (1 - damping) s + damping s_eq(s)
    double initial_s = 0.0;
    int max_iterations = 5000;
};

/// Joint solution of (a, b, s) at fixed rho. Throws SolverError::NoConvergence with the
/// final residuals if the damped s iteration or the residual check fails.
inline SaddleSolution solve_saddle(double rho, const ChannelParams& p, Mode mode = Mode::PeakPower,
                                   const SaddleOptions& opt = {}) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidParams("solve_saddle: rho must be finite and >= 0");
    SaddleSolution sol;
    sol.rho = rho;
    sol.mode = mode == Mode::AveragePower ? Mode::AveragePower : Mode::PeakPower;

    const bool constrained = uses_power_constraint(mode) && rho > 0.0;
    double s = constrained ? std::clamp(opt.initial_s, 0.0, 0.99) : 0.0;
    Endpoints ends = solve_endpoints(rho, s, p);
    int it = 0;
    if (constrained) {
        double step = 1.0;
        for (; it < opt.max_iterations; ++it) {
            const double z = z_of(rho, s, p);
            const double target = s_stationary(rho, ends.a, ends.b, z, p);
            if (!(target < 1.0))
                throw SolverError(SolverError::Kind::NoConvergence, "solve_saddle: s left [0, 1)");
            step = target - s;
            if (std::abs(step) <= 1e-15 * std::max(1.0, s)) break;
            s += opt.damping * step;
            ends = solve_endpoints(rho, s, p);
        }
        if (it == opt.max_iterations)
            throw SolverError(SolverError::Kind::NoConvergence,
                              "solve_saddle: s iteration did not converge after " + std::to_string(it) +
                                  " steps, last step " + std::to_string(step));
    }
    sol.s = s;
    sol.a = ends.a;
    sol.b = ends.b;
    sol.z = z_of(rho, s, p);
    sol.zero_lower_edge = ends.zero_lower_edge;
    sol.s_iterations = it;
    sol.residuals = residuals_of(sol, p);

    const double scale = 1.0 + sol.b + 2.0 * rho * p.alpha_per_block();
    const auto& r = sol.residuals;
    if (std::abs(r.edge) > kResidualTol || std::abs(r.normalization) > kResidualTol * scale ||
        std::abs(r.s_equation) > kResidualTol)
        throw SolverError(SolverError::Kind::NoConvergence,
                          "solve_saddle: residuals (" + std::to_string(r.edge) + ", " +
                              std::to_string(r.normalization) + ", " + std::to_string(r.s_equation) +
                              ") above tolerance at rho = " + std::to_string(rho));
    return sol;
}

/// Tilted eigenvalue density p*(x) on [a, b]; zero outside and at both edges.
inline double pstar_density(double x, const SaddleSolution& sol, const ChannelParams& p) {
    const double a = sol.a, b = sol.b, z = sol.z;
    if (!(x > a && x < b) || x <= 0.0) return 0.0;
    const double k = detail::kappa(sol.rho, a, b, z, p.alpha_per_block());
    return std::sqrt((x - a) * (b - x)) / (2.0 * std::numbers::pi * x * (x + z)) * (x + z + k * z);
}

/// Rate map at a solved saddle point, closed form in G:
/// rbar = log(1-s) + int p* log(1 + x/z). In average-power mode s is pinned, and the
/// rho-stationarity carries the extra term -s_eq(rho) (the value s would take if free).
inline double rbar_at(const SaddleSolution& sol, const ChannelParams& p) {
    const double a = sol.a, b = sol.b, z = sol.z, width = b - a;
    const double k = detail::kappa(sol.rho, a, b, z, p.alpha_per_block());
    const double x = (z + a) / width;
    double r = std::log(width * (1.0 - sol.s) / z) + 0.5 * width * (1.0 + k) * rmt::g_kernel(x, a / width) -
               0.5 * width * k * rmt::g_kernel(x, x);
    if (!uses_power_constraint(sol.mode)) r -= s_stationary(sol.rho, a, b, z, p);
    return r;
}

inline double rbar(double rho, const ChannelParams& p, Mode mode = Mode::PeakPower) {
    return rbar_at(solve_saddle(rho, p, mode), p);
}

inline double r1(const ChannelParams& p, Mode mode = Mode::PeakPower) { return rbar(1.0, p, mode); }

struct RhoOptions {
    double rho_max = 1e3;     // sphere-packing bracket cap
    double rate_tol = 1e-12;  // |rbar(rho) - r| at which the root is accepted
};

/// rho(r): 0 at or above the ergodic rate; the root of rbar(rho) = r in [0, 1] for
/// r1 <= r < r_erg; below r1 either the clamp rho = 1 or, in sphere-packing mode, the
/// root on an expanding bracket [1, rho_max].
inline double rho_of_rate(double r, const ChannelParams& p, Mode mode = Mode::PeakPower, const RhoOptions& opt = {}) {
    if (!(r > 0.0)) throw InvalidParams("rho_of_rate: rate must be > 0");
    const ChannelParams q1 = p.single_block();
    const double r_erg = rmt::ergodic_rate(p);
    if (r >= r_erg) return 0.0;

    auto excess = [&](double rho) { return rbar(rho, q1, mode) - r; };
    roots::BracketOptions bo;
    bo.f_tol = opt.rate_tol;
    bo.check_monotone = true;

    const double at_one = excess(1.0);
    if (at_one <= 0.0) return roots::find_root(excess, 0.0, 1.0, r_erg - r, at_one, bo).x;
    if (mode != Mode::SpherePacking) return 1.0;

    double lo = 1.0, hi = 2.0, f_lo = at_one, f_hi = excess(hi);
    while (f_hi > 0.0) {
        if (f_hi > f_lo)
            throw SolverError(SolverError::Kind::NonMonotone, "rho_of_rate: rbar increased on the sphere-packing bracket");
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        if (hi > opt.rho_max)
            throw SolverError(SolverError::Kind::BracketFailure,
                              "rho_of_rate: sphere-packing bracket exceeds rho_max = " + std::to_string(opt.rho_max));
        f_hi = excess(hi);
    }
    return roots::find_root(excess, lo, hi, f_lo, f_hi, bo).x;
}

}  // namespace gallager::saddle
