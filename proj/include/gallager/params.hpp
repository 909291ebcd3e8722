#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gallager {

/// Thrown when a ChannelParams (or derived configuration) violates its domain.
class InvalidParams : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Iterative solver failure. `kind` distinguishes the recoverable classes.
class SolverError : public std::runtime_error {
public:
    enum class Kind { NoConvergence, BracketFailure, NonMonotone, Domain };

    SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Input-ensemble variant of the exponent.
///   PeakPower     : trace constraint enforced through s in [0,1)
///   AveragePower  : unconstrained Gaussian inputs, s == 0
///   SpherePacking : peak-power with the rho maximization extended past 1
enum class Mode { PeakPower, AveragePower, SpherePacking };

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::PeakPower: return "peak-power";
        case Mode::AveragePower: return "average-power";
        case Mode::SpherePacking: return "sphere-packing";
    }
    return "?";
}

inline Mode mode_from_string(std::string_view s) {
    if (s == "peak-power") return Mode::PeakPower;
    if (s == "average-power") return Mode::AveragePower;
    if (s == "sphere-packing") return Mode::SpherePacking;
    throw InvalidParams("unknown mode '" + std::string(s) + "'");
}

/// Saddle-point structure depends only on whether the input is power-constrained.
inline bool uses_power_constraint(Mode m) { return m != Mode::AveragePower; }

/// Problem instance: antenna ratio beta = K/N, noise power sigma2 (SNR = 1/sigma2),
/// blocklength ratio alpha = T/N and the number Q of independent fading blocks.
class ChannelParams {
public:
    ChannelParams(double beta, double sigma2, double alpha, int q_blocks = 1)
        : beta_(beta), sigma2_(sigma2), alpha_(alpha), q_blocks_(q_blocks) {
        if (!(beta >= 1.0) || !std::isfinite(beta))
            throw InvalidParams("beta must be finite and >= 1");
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw InvalidParams("sigma2 must be finite and > 0");
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw InvalidParams("alpha must be finite and > 0");
        if (q_blocks < 1) throw InvalidParams("q_blocks must be >= 1");
    }

    double beta() const noexcept { return beta_; }
    double sigma2() const noexcept { return sigma2_; }
    double alpha() const noexcept { return alpha_; }
    int q_blocks() const noexcept { return q_blocks_; }

    /// Exactly-square channel (K == N): the lower spectral edge sits at zero.
    bool square() const noexcept { return beta_ == 1.0; }

    /// Per-block blocklength ratio alpha / Q; every saddle-point solve runs at Q = 1 with this.
    double alpha_per_block() const noexcept { return alpha_ / q_blocks_; }

    ChannelParams with_alpha(double alpha) const { return {beta_, sigma2_, alpha, q_blocks_}; }
    ChannelParams with_q(int q) const { return {beta_, sigma2_, alpha_, q}; }
    ChannelParams with_sigma2(double sigma2) const { return {beta_, sigma2, alpha_, q_blocks_}; }

    /// The Q = 1 instance with alpha replaced by alpha / Q.
    ChannelParams single_block() const { return {beta_, sigma2_, alpha_per_block(), 1}; }

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;

private:
    double beta_;
    double sigma2_;
    double alpha_;
    int q_blocks_;
};

inline double sigma2_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace gallager
