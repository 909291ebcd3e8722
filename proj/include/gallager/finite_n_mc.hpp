#pragma once

// Finite-N Monte Carlo estimate of the Gallager exponent E_N(r): Wishart eigenvalue
// sampling, per-channel maximization over (rho, s) and a shifted log-mean-exp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gallager/params.hpp"
#include "gallager/roots.hpp"

namespace gallager::mc {

struct McConfig {
    int n = 1;                 // transmit antennas N
    ChannelParams params{1.0, 1.0, 1.0, 1};  // K = beta N must be an integer
    double r = 0.0;            // nats per antenna
    long num_samples = 1;
    std::uint64_t seed = 0;
    int threads = 1;           // does not affect the result

    /// Receive antennas K = beta N; throws InvalidParams unless integral.
    int k() const {
        const double kk = params.beta() * n;
        const double rounded = std::round(kk);
        if (std::abs(kk - rounded) > 1e-9 * std::max(1.0, kk))
            throw InvalidParams("McConfig: beta * n must be an integer");
        return static_cast<int>(rounded);
    }

    void validate() const {
        if (n < 1) throw InvalidParams("McConfig: n must be >= 1");
        if (num_samples < 1) throw InvalidParams("McConfig: num_samples must be >= 1");
        if (!(r > 0.0)) throw InvalidParams("McConfig: rate must be > 0");
        if (threads < 1) throw InvalidParams("McConfig: threads must be >= 1");
        (void)k();
    }
};

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent engine for sample `index`; `attempt` > 0 after a rejected draw.
inline std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t attempt = 0) {
    const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (attempt * 0xd1b54a32d192ed03ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(attempt)};
    return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Eigenvalues

/// Eigenvalues of a real symmetric matrix (row-major, dim x dim) by cyclic Jacobi
/// rotations, ascending. Throws SolverError when the sweep budget runs out.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> m, int dim, int max_sweeps = 60) {
    auto at = [&](int i, int j) -> double& { return m[static_cast<std::size_t>(i) * dim + j]; };
    double total = 0.0;
    for (double v : m) total += v * v;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j) off += at(i, j) * at(i, j);
        if (off <= 1e-30 * total || off == 0.0) {
            std::vector<double> ev(dim);
            for (int i = 0; i < dim; ++i) ev[i] = at(i, i);
            std::sort(ev.begin(), ev.end());
            return ev;
        }
        for (int p = 0; p < dim; ++p) {
            for (int q = p + 1; q < dim; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < dim; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < dim; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    throw SolverError(SolverError::Kind::NoConvergence, "jacobi_eigenvalues: sweep budget exhausted");
}

/// Eigenvalues of H^dagger H for a k x n matrix H with i.i.d. CN(0, 1/n) entries,
/// one list of n values per block. The n x n Hermitian Gram matrix A + iB is
/// diagonalized through its real embedding [[A, -B], [B, A]], whose spectrum is
/// that of A + iB with every eigenvalue doubled.
inline std::vector<std::vector<double>> sample_block_eigenvalues(int n, int k, int q_blocks, std::mt19937_64& rng) {
    if (n < 1 || k < n) throw InvalidParams("sample_block_eigenvalues: need k >= n >= 1");
    if (q_blocks < 1) throw InvalidParams("sample_block_eigenvalues: q_blocks must be >= 1");
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 / n));
    std::vector<std::vector<double>> out;
    out.reserve(q_blocks);
    std::vector<double> re(static_cast<std::size_t>(k) * n), im(re.size());
    for (int q = 0; q < q_blocks; ++q) {
        for (std::size_t i = 0; i < re.size(); ++i) {
            re[i] = normal(rng);
            im[i] = normal(rng);
        }
        const int dim = 2 * n;
        std::vector<double> emb(static_cast<std::size_t>(dim) * dim);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                // (H^dagger H)_{ij} = sum_l conj(h_li) h_lj
                double ar = 0.0, ai = 0.0;
                for (int l = 0; l < k; ++l) {
                    const double xr = re[l * n + i], xi = im[l * n + i];
                    const double yr = re[l * n + j], yi = im[l * n + j];
                    ar += xr * yr + xi * yi;
                    ai += xr * yi - xi * yr;
                }
                emb[i * dim + j] = ar;
                emb[(i + n) * dim + (j + n)] = ar;
                emb[i * dim + (j + n)] = -ai;
                emb[(i + n) * dim + j] = ai;
            }
        }
        auto ev = jacobi_eigenvalues(std::move(emb), dim);
        std::vector<double> lam(n);
        for (int i = 0; i < n; ++i) lam[i] = std::max(0.0, 0.5 * (ev[2 * i] + ev[2 * i + 1]));
        out.push_back(std::move(lam));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-channel exponent

struct ConditionalExponent {
    double value = 0.0;
    double rho = 0.0;
    double s = 0.0;
};

/// alpha [ (rho/(NQ)) sum log(1 + lambda/z) - rho r + (1 + rho)(s + log(1 - s)) ], z = (1+rho)(1-s) sigma2.
inline double conditional_objective(const std::vector<std::vector<double>>& eig, double r, const ChannelParams& p,
                                    double rho, double s) {
    const double z = (1.0 + rho) * (1.0 - s) * p.sigma2();
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& block : eig) {
        for (double lam : block) sum += std::log1p(lam / z);
        count += block.size();
    }
    return p.alpha() * (rho * sum / count - rho * r + (1.0 + rho) * (s + std::log1p(-s)));
}

namespace detail {

inline double mean_ratio(const std::vector<std::vector<double>>& eig, double z) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& block : eig) {
        for (double lam : block) sum += lam / (z + lam);
        count += block.size();
    }
    return sum / count;
}

/// Maximizer in s at fixed rho: s = rho/(1+rho) * mean(lambda/(z+lambda)) =: T(s).
/// Fixed-point iteration damped by 1/(1 - T'(s)), kept inside [0, w].
inline double best_s(const std::vector<std::vector<double>>& eig, double rho, const ChannelParams& p) {
    if (rho == 0.0) return 0.0;
    const double w = rho / (1.0 + rho);
    const double scale = (1.0 + rho) * p.sigma2();
    double s = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double z = scale * (1.0 - s);
        double m1 = 0.0, m2 = 0.0;
        std::size_t count = 0;
        for (const auto& block : eig) {
            for (double lam : block) {
                const double q = 1.0 / (z + lam);
                m1 += lam * q;
                m2 += lam * q * q;
            }
            count += block.size();
        }
        const double target = w * m1 / count;
        const double slope = w * scale * m2 / count;  // T'(s)
        const double step = target - s;
        if (std::abs(step) <= 1e-15) return target;
        const double damping = slope < 1.0 ? 1.0 / (1.0 - slope) : 0.5;
        s = std::clamp(s + damping * step, 0.0, w);
    }
    // Fallback: the s-derivative is proportional to T(s) - s, positive at 0, negative at w.
    auto excess = [&](double x) { return w * mean_ratio(eig, scale * (1.0 - x)) - x; };
    roots::BracketOptions bo;
    bo.x_tol = 1e-15;
    return roots::find_root(excess, 0.0, w, bo).x;
}

}  // namespace detail

/// max over rho in [0, 1], s in [0, 1) of the conditional objective: golden section on rho
/// with the stationary s for each rho. Never negative; 0 only at rho = 0.
inline ConditionalExponent conditional_exponent(const std::vector<std::vector<double>>& eig, double r,
                                                const ChannelParams& p) {
    if (eig.empty() || eig.front().empty()) throw InvalidParams("conditional_exponent: no eigenvalues");
    if (!(r > 0.0)) throw InvalidParams("conditional_exponent: rate must be > 0");
    auto profile = [&](double rho) { return conditional_objective(eig, r, p, rho, detail::best_s(eig, rho, p)); };
    auto best = roots::golden_max(profile, 0.0, 1.0, 1e-10);
    if (!(best.fx > 0.0)) return {0.0, 0.0, 0.0};
    return {best.fx, best.x, detail::best_s(eig, best.x, p)};
}

// ---------------------------------------------------------------------------
// Aggregation

struct McEstimate {
    double e_n = 0.0;
    double stderr_e = 0.0;  // delta-method standard error of e_n
    long num_samples = 0;
    double ess = 0.0;       // effective sample size of the exp weights
    long rejected = 0;      // draws discarded after an eigensolver failure
    double min_log = 0.0;   // min / median / max of per-sample N^2 E(r|H)
    double median_log = 0.0;
    double max_log = 0.0;
    std::string warning;    // non-empty when ess < kMinEss
};

inline constexpr double kMinEss = 100.0;

/// E_N = -(1/N^2) log mean exp(-N^2 E_m) from per-sample exponents, shifted by the minimum.
inline McEstimate aggregate(const std::vector<double>& per_sample, int n) {
    McEstimate est;
    const std::size_t m = per_sample.size();
    if (m == 0) throw InvalidParams("aggregate: no samples");
    const double n2 = static_cast<double>(n) * n;
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = n2 * per_sample[i];
    const double shift = *std::min_element(x.begin(), x.end());

    double sum = 0.0, sum2 = 0.0;
    for (double xi : x) {
        const double w = std::exp(-(xi - shift));
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / m;
    est.e_n = (shift - std::log(mean)) / n2;
    if (m > 1) {
        const double var = std::max(0.0, (sum2 - sum * sum / m) / (m - 1));
        est.stderr_e = std::sqrt(var / m) / (mean * n2);
    }
    est.num_samples = static_cast<long>(m);
    est.ess = sum * sum / sum2;

    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    est.min_log = sorted.front();
    est.max_log = sorted.back();
    est.median_log = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    if (est.ess < kMinEss)
        est.warning = "effective sample size " + std::to_string(est.ess) + " is below " +
                      std::to_string(static_cast<int>(kMinEss)) + "; the estimate is dominated by few samples";
    return est;
}

inline constexpr int kMaxAttempts = 8;

/// Per-sample conditional exponents in sample-index order, plus the rejected-draw count.
inline std::pair<std::vector<double>, long> sample_exponents(const McConfig& cfg) {
    cfg.validate();
    const int k = cfg.k();
    const std::size_t m = static_cast<std::size_t>(cfg.num_samples);
    std::vector<double> values(m);
    std::vector<long> rejected(m, 0);
    std::vector<std::string> errors(m);

    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            for (int attempt = 0;; ++attempt) {
                try {
                    auto rng = sample_stream(cfg.seed, i, attempt);
                    auto eig = sample_block_eigenvalues(cfg.n, k, cfg.params.q_blocks(), rng);
                    values[i] = conditional_exponent(eig, cfg.r, cfg.params).value;
                    break;
                } catch (const SolverError& e) {
                    ++rejected[i];
                    if (attempt + 1 >= kMaxAttempts) {
                        errors[i] = e.what();
                        break;
                    }
                }
            }
        }
    };

    const int threads = static_cast<int>(std::min<std::size_t>(cfg.threads, m));
    if (threads <= 1) {
        run(0, m);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (m + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk, end = std::min(m, begin + chunk);
            if (begin < end) pool.emplace_back(run, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw SolverError(SolverError::Kind::NoConvergence, "sample rejected repeatedly: " + e);
    return {std::move(values), std::accumulate(rejected.begin(), rejected.end(), 0L)};
}

/// Monte Carlo E_N(r). Deterministic in the config; the thread count does not change the result.
inline McEstimate estimate_en(const McConfig& cfg) {
    auto [values, rejected] = sample_exponents(cfg);
    auto est = aggregate(values, cfg.n);
    est.rejected = rejected;
    return est;
}

}  // namespace gallager::mc
