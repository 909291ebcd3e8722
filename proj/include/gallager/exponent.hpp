#pragma once

// Large-N Gallager random-coding exponent E(r) for MIMO block fading, in all of its
// regimes: closed forms (beta > 1 and beta = 1), average-power and sphere-packing
// variants, Q-scaling, the Q -> infinity limit and the quadratic dispersion laws.
// The variational functional evaluated by quadrature is the reference the closed
// forms are tested against.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gallager/params.hpp"
#include "gallager/quadrature.hpp"
#include "gallager/rmt_core.hpp"
#include "gallager/roots.hpp"
#include "gallager/saddlepoint.hpp"

namespace gallager::exponent {

enum class Regime { Clamped, Interior, Zero };

inline std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::Clamped: return "clamped";
        case Regime::Interior: return "interior";
        case Regime::Zero: return "zero";
    }
    return "?";
}

struct ExponentPoint {
    double r = 0.0;
    double e = 0.0;
    double rho = 0.0;
    double s = 0.0;
    double a = 0.0;
    double b = 0.0;
    Mode mode = Mode::PeakPower;
    Regime regime = Regime::Zero;
    std::string status = "ok";  // failure message when the point could not be evaluated

    bool ok() const { return status == "ok"; }
};

/// 1/2 (3 beta - beta^2 log beta + (beta-1)^2 log(beta-1)), with (beta-1)^2 log(beta-1) -> 0 at beta = 1.
inline double rate_function_constant(double beta) {
    const double tail = beta > 1.0 ? (beta - 1.0) * (beta - 1.0) * std::log(beta - 1.0) : 0.0;
    return 0.5 * (3.0 * beta - beta * beta * std::log(beta) + tail);
}

/// Single-block (Q = 1, alpha -> alpha/Q) exponent objective at a solved saddle point and rate r,
/// closed form. beta > 1 uses the general expression; the a = 0 branch uses its a -> 0, beta -> 1 limit.
inline double closed_form_single_block(double r, const saddle::SaddleSolution& sol, const ChannelParams& p) {
    using rmt::g_kernel;
    const double beta = p.beta(), alpha = p.alpha_per_block();
    const double rho = sol.rho, s = sol.s, a = sol.a, b = sol.b, z = sol.z;
    const double width = b - a;
    const double root = std::sqrt((z + a) * (z + b));
    const double k = alpha * rho / root;
    const double x = (z + a) / width;
    const double y = a / width;
    const double ar = alpha * rho;
    const double d = std::sqrt(z + b) - std::sqrt(z + a);

    const double g_xx = g_kernel(x, x);
    const double g_xy = g_kernel(x, y);
    const double rate_part = std::log(width / z) - 0.5 * width * k * g_xx + 0.5 * width * (1.0 + k) * g_xy;

    double e = width * width / 32.0 - ar * r - std::log(width) + alpha * (1.0 + rho) * (s + std::log1p(-s)) +
               0.5 * ar * z * d * d / (4.0 * root) - rate_function_constant(beta) + 0.5 * ar * rate_part;
    if (sol.zero_lower_edge) {
        e += 0.5 * width * ar / root * g_kernel(0.0, x) - 0.5 * width * (1.0 + k) * g_kernel(0.0, 0.0);
    } else {
        const double half_excess = 0.5 * (beta - 1.0);
        e += a / 2.0 - half_excess * std::log(a * width) + 0.5 * ar * std::log1p(a / z) +
             0.5 * width * ar / root * (g_kernel(0.0, x) + half_excess * g_kernel(y, x)) -
             0.5 * width * (1.0 + k) * (g_kernel(0.0, y) + half_excess * g_kernel(y, y));
    }
    return e;
}

struct VariationalOptions {
    quad::Options quad{1e-12, 0.0, 4000};
};

/// Single-block variational functional -Sigma[p*] + int (x - (beta-1) log x) p* + alpha g(rho, s, p*) - const,
/// evaluated by quadrature. The logarithmic double integral is reduced to single integrals with
/// the stationarity condition 2 int log|x-y| p*(y) dy = V(x) - c on the support, where
/// V(x) = x - (beta-1) log x + alpha rho log(1 + x/z) and c is fixed by evaluating at an edge.
inline double variational_single_block(double r, const saddle::SaddleSolution& sol, const ChannelParams& p,
                                       const VariationalOptions& opt = {}) {
    const double beta = p.beta(), alpha = p.alpha_per_block();
    const double a = sol.a, b = sol.b, z = sol.z, rho = sol.rho, s = sol.s;
    const double width = b - a;
    const bool log_free = beta == 1.0;  // (beta - 1) log x vanishes identically

    auto log_weight = [&](double x) { return log_free ? 0.0 : (beta - 1.0) * std::log(x); };
    auto potential = [&](double x) { return x - log_weight(x) + alpha * rho * std::log1p(x / z); };

    auto integrate = [&](auto&& f) {
        auto res = quad::integrate_sqrt_edges(f, a, b, opt.quad);
        if (!res.converged)
            throw SolverError(SolverError::Kind::NoConvergence,
                              "variational: quadrature error estimate " + std::to_string(res.abs_error));
        return res.value;
    };
    auto dens = [&](double x) { return saddle::pstar_density(x, sol, p); };

    // c from the stationarity condition at x = a, or at x = b when log a is unusable.
    const bool at_lower = a > 0.0 || log_free;
    const double edge = at_lower ? a : b;
    const double log_dist_integral = integrate([&](double x, double theta) {
        const double t = at_lower ? std::sin(theta) : std::cos(theta);
        return (std::log(width) + 2.0 * std::log(t)) * dens(x);
    });
    const double edge_potential = (edge == 0.0 ? 0.0 : potential(edge));
    const double c = edge_potential - 2.0 * log_dist_integral;

    const double potential_mean = integrate([&](double x, double) { return potential(x) * dens(x); });
    const double log_energy = 0.5 * (potential_mean - c);  // int int log|x-y| p* p*
    const double single = integrate([&](double x, double) { return (x - log_weight(x)) * dens(x); });
    const double info = integrate([&](double x, double) { return std::log1p(x / z) * dens(x); });

    return -log_energy + single + alpha * (rho * info - rho * r + (1.0 + rho) * (s + std::log1p(-s))) -
           rate_function_constant(beta);
}

/// Quadratic law (r - r_erg)^2 / (2 v) near the ergodic rate.
///   Outage      : v = v_inf
///   FiniteAlpha : v = v_alpha (Q = 1); for Q blocks, Q (r - r_erg)^2 / (2 v_{alpha/Q})
///   QInfinity   : v = delta_v / alpha
enum class QuadraticRegime { Outage, FiniteAlpha, QInfinity };

inline double quadratic_approx(double r, const ChannelParams& p, QuadraticRegime regime,
                               Mode mode = Mode::PeakPower) {
    const double dr = r - rmt::ergodic_rate(p);
    switch (regime) {
        case QuadraticRegime::Outage: return dr * dr / (2.0 * rmt::dispersion_vinf(p));
        case QuadraticRegime::FiniteAlpha: return p.q_blocks() * dr * dr / (2.0 * rmt::v_alpha(p, mode));
        case QuadraticRegime::QInfinity: return p.alpha() * dr * dr / (2.0 * rmt::delta_v(p, mode));
    }
    return 0.0;
}

inline double v_alpha(const ChannelParams& p, Mode mode = Mode::PeakPower) { return rmt::v_alpha(p, mode); }

/// Relative distance to r_erg below which the exponent is taken from the quadratic law.
inline constexpr double kNearErgodic = 1e-6;

struct ExponentOptions {
    saddle::RhoOptions rho;
    double initial_s = 0.0;  // warm start for the s iteration
};

/// E(r) = Q E_1(r; alpha/Q) with E_1 the single-block closed form at rho(r).
inline ExponentPoint gallager_exponent(double r, const ChannelParams& p, Mode mode = Mode::PeakPower,
                                       const ExponentOptions& opt = {}) {
    if (!(r > 0.0)) throw InvalidParams("gallager_exponent: rate must be > 0");
    ExponentPoint pt;
    pt.r = r;
    pt.mode = mode;
    const double r_erg = rmt::ergodic_rate(p);
    if (r >= r_erg) {
        const auto mp = rmt::mp_support(p);
        pt.a = mp.a0;
        pt.b = mp.b0;
        return pt;
    }
    const ChannelParams single = p.single_block();
    const saddle::SaddleOptions so{0.5, opt.initial_s, 5000};

    if (r_erg - r < kNearErgodic * r_erg) {
        // rho underflows here; the quadratic law is exact to second order.
        pt.rho = (r_erg - r) / (single.alpha() * rmt::v_alpha(single, mode));
        auto sol = saddle::solve_saddle(pt.rho, single, mode, so);
        pt.e = quadratic_approx(r, p, QuadraticRegime::FiniteAlpha, mode);
        pt.s = sol.s;
        pt.a = sol.a;
        pt.b = sol.b;
        pt.regime = Regime::Interior;
        return pt;
    }

    pt.rho = saddle::rho_of_rate(r, single, mode, opt.rho);
    auto sol = saddle::solve_saddle(pt.rho, single, mode, so);
    pt.e = p.q_blocks() * closed_form_single_block(r, sol, single);
    pt.s = sol.s;
    pt.a = sol.a;
    pt.b = sol.b;
    pt.regime = pt.rho == 1.0 && mode != Mode::SpherePacking ? Regime::Clamped : Regime::Interior;
    if (pt.rho == 0.0) pt.regime = Regime::Zero;
    return pt;
}

/// Reference value of E(r) from the variational functional at the same saddle point.
inline double exponent_variational(double r, const ChannelParams& p, Mode mode = Mode::PeakPower,
                                   const VariationalOptions& opt = {}) {
    if (!(r > 0.0)) throw InvalidParams("exponent_variational: rate must be > 0");
    if (r >= rmt::ergodic_rate(p)) {
        // rho = 0: the rate function at the MP law.
        const ChannelParams single = p.single_block();
        auto sol = saddle::solve_saddle(0.0, single, mode);
        return p.q_blocks() * variational_single_block(r, sol, single, opt);
    }
    const ChannelParams single = p.single_block();
    const double rho = saddle::rho_of_rate(r, single, mode);
    auto sol = saddle::solve_saddle(rho, single, mode);
    return p.q_blocks() * variational_single_block(r, sol, single, opt);
}

namespace detail {

/// s(rho) for the Q -> infinity limit: the stationary point with MP edges.
inline double q_infinity_s(double rho, const ChannelParams& p, Mode mode) {
    if (!uses_power_constraint(mode) || rho == 0.0) return 0.0;
    const auto mp = rmt::mp_support(p);
    double s = 0.0;
    for (int it = 0; it < 5000; ++it) {
        const double z = saddle::z_of(rho, s, p);
        const double d = std::sqrt(z + mp.b0) - std::sqrt(z + mp.a0);
        const double target = rho / (4.0 * (1.0 + rho)) * d * d;
        if (std::abs(target - s) <= 1e-15 * std::max(1.0, s)) return target;
        s += 0.5 * (target - s);
    }
    throw SolverError(SolverError::Kind::NoConvergence, "q_infinity: s fixed point did not converge");
}

inline double q_infinity_rbar(double rho, const ChannelParams& p, Mode mode) {
    const double s = q_infinity_s(rho, p, mode);
    const double z = saddle::z_of(rho, s, p);
    double r = std::log1p(-s) + rmt::ergodic_rate(p.beta(), z);
    if (!uses_power_constraint(mode)) r -= rho / (1.0 + rho) * rmt::g0(p.beta(), z);
    return r;
}

}  // namespace detail

/// Q -> infinity limit: alpha max_{rho, s} [rho r_erg(beta, z) - rho r + (1 + rho)(s + log(1 - s))].
inline ExponentPoint exponent_q_infinity(double r, const ChannelParams& p, Mode mode = Mode::PeakPower,
                                         const saddle::RhoOptions& ro = {}) {
    if (!(r > 0.0)) throw InvalidParams("exponent_q_infinity: rate must be > 0");
    ExponentPoint pt;
    pt.r = r;
    pt.mode = mode;
    const auto mp = rmt::mp_support(p);
    pt.a = mp.a0;
    pt.b = mp.b0;
    const double r_erg = rmt::ergodic_rate(p);
    if (r >= r_erg) return pt;

    auto excess = [&](double rho) { return detail::q_infinity_rbar(rho, p, mode) - r; };
    roots::BracketOptions bo;
    bo.f_tol = ro.rate_tol;
    bo.check_monotone = true;
    const double at_one = excess(1.0);
    if (at_one <= 0.0) {
        pt.rho = roots::find_root(excess, 0.0, 1.0, r_erg - r, at_one, bo).x;
        pt.regime = Regime::Interior;
    } else if (mode != Mode::SpherePacking) {
        pt.rho = 1.0;
        pt.regime = Regime::Clamped;
    } else {
        double lo = 1.0, hi = 2.0, f_lo = at_one, f_hi = excess(hi);
        while (f_hi > 0.0) {
            lo = hi;
            f_lo = f_hi;
            hi *= 2.0;
            if (hi > ro.rho_max)
                throw SolverError(SolverError::Kind::BracketFailure, "exponent_q_infinity: bracket exceeds rho_max");
            f_hi = excess(hi);
        }
        pt.rho = roots::find_root(excess, lo, hi, f_lo, f_hi, bo).x;
        pt.regime = Regime::Interior;
    }
    pt.s = detail::q_infinity_s(pt.rho, p, mode);
    const double z = saddle::z_of(pt.rho, pt.s, p);
    pt.e = p.alpha() * (pt.rho * rmt::ergodic_rate(p.beta(), z) - pt.rho * r +
                        (1.0 + pt.rho) * (pt.s + std::log1p(-pt.s)));
    return pt;
}

/// Rate below which rho is clamped at 1 (finite Q, per-block alpha).
inline double r1(const ChannelParams& p, Mode mode = Mode::PeakPower) { return saddle::r1(p.single_block(), mode); }

inline double r1_q_infinity(const ChannelParams& p, Mode mode = Mode::PeakPower) {
    return detail::q_infinity_rbar(1.0, p, mode);
}

/// Account for channel training by spending N of the T channel uses: alpha -> alpha - 1.
inline ChannelParams training_adjusted(const ChannelParams& p) {
    if (!(p.alpha() > 1.0)) throw InvalidParams("training_adjusted: alpha must exceed 1");
    return p.with_alpha(p.alpha() - 1.0);
}

struct CurveTable {
    ChannelParams params;
    Mode mode;
    std::vector<ExponentPoint> rows;

    bool all_ok() const {
        return std::all_of(rows.begin(), rows.end(), [](const ExponentPoint& pt) { return pt.ok(); });
    }
};

struct SweepOptions {
    int threads = 1;
    bool warm_start = true;  // seed each s iteration with the previous point's s
    bool q_infinity = false; // evaluate the Q -> infinity limit instead
};

/// Evaluate E on a strictly increasing rate grid. Failures are recorded per row.
inline CurveTable sweep(const std::vector<double>& r_grid, const ChannelParams& p, Mode mode = Mode::PeakPower,
                        const SweepOptions& opt = {}) {
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        if (!(r_grid[i] > 0.0)) throw InvalidParams("sweep: rates must be positive");
        if (i > 0 && !(r_grid[i] > r_grid[i - 1])) throw InvalidParams("sweep: rate grid must be strictly increasing");
    }
    CurveTable table{p, mode, std::vector<ExponentPoint>(r_grid.size())};

    auto run_range = [&](std::size_t begin, std::size_t end) {
        double s_hint = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            ExponentOptions eo;
            if (opt.warm_start) eo.initial_s = s_hint;
            try {
                table.rows[i] = opt.q_infinity ? exponent_q_infinity(r_grid[i], p, mode, eo.rho)
                                               : gallager_exponent(r_grid[i], p, mode, eo);
                s_hint = table.rows[i].s;
            } catch (const std::exception& ex) {
                ExponentPoint bad;
                bad.r = r_grid[i];
                bad.mode = mode;
                bad.e = std::nan("");
                bad.status = ex.what();
                table.rows[i] = bad;
            }
        }
    };

    const int threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(r_grid.size())));
    if (threads == 1) {
        run_range(0, r_grid.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (r_grid.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk, end = std::min(r_grid.size(), begin + chunk);
            if (begin < end) pool.emplace_back(run_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return table;
}

}  // namespace gallager::exponent
