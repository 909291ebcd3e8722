#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gallager/finite_n_mc.hpp"
#include "gallager/rmt_core.hpp"
#include "oracles.hpp"

using namespace gallager;

namespace {

const ChannelParams kFig(3.0, 0.05, 2.0, 1);

mc::McConfig config(int n, long m, std::uint64_t seed, double r_frac = 0.6, const ChannelParams& p = kFig) {
    mc::McConfig c;
    c.n = n;
    c.params = p;
    c.r = r_frac * rmt::ergodic_rate(p);
    c.num_samples = m;
    c.seed = seed;
    return c;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

TEST(JacobiTest, KnownSpectrum) {
    // [[2,1,0],[1,2,1],[0,1,2]] has eigenvalues 2 - sqrt2, 2, 2 + sqrt2.
    auto ev = mc::jacobi_eigenvalues({2, 1, 0, 1, 2, 1, 0, 1, 2}, 3);
    EXPECT_NEAR(ev[0], 2 - std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(ev[1], 2.0, 1e-14);
    EXPECT_NEAR(ev[2], 2 + std::sqrt(2.0), 1e-14);
    EXPECT_THROW(mc::jacobi_eigenvalues({1, 1e-3, 1e-3, 2}, 2, 0), SolverError);
}

TEST(SamplingTest, ScalarIsExponentialWithUnitMean) {
    double sum = 0.0;
    const int m = 100000;
    for (int i = 0; i < m; ++i) {
        auto rng = mc::sample_stream(5, i);
        sum += mc::sample_block_eigenvalues(1, 1, 1, rng)[0][0];
    }
    EXPECT_NEAR(sum / m, 1.0, 0.02);
}

TEST(SamplingTest, TraceIdentity) {
    const int n = 4, k = 12, m = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < m; ++i) {
        auto rng = mc::sample_stream(17, i);
        auto eig = mc::sample_block_eigenvalues(n, k, 1, rng);
        double tr = 0.0;
        for (double l : eig[0]) tr += l;
        sum += tr;
        sum2 += tr * tr;
    }
    const double mean = sum / m, se = std::sqrt((sum2 / m - mean * mean) / m);
    EXPECT_NEAR(mean, k, 3 * se);
}

TEST(SamplingTest, HistogramCloseToMp) {
    const ChannelParams p(3.0, 0.05, 2.0);
    std::vector<double> all;
    for (int i = 0; i < 10000; ++i) {
        auto rng = mc::sample_stream(23, i);
        auto eig = mc::sample_block_eigenvalues(4, 12, 1, rng);
        all.insert(all.end(), eig[0].begin(), eig[0].end());
    }
    std::sort(all.begin(), all.end());
    const auto mp = rmt::mp_support(p);
    double ks = 0.0;
    for (int j = 1; j < 200; ++j) {
        const double x = mp.a0 + (mp.b0 - mp.a0) * j / 200.0;
        const double cdf = gallager::quad::integrate_sqrt_edges(
                               [&](double t, double) { return rmt::mp_density(t, p); }, mp.a0, x, oracle::kTight)
                               .value;
        // The integrand is sqrt-singular only at a0 on [a0, x]; the substitution handles both ends.
        const double emp = double(std::upper_bound(all.begin(), all.end(), x) - all.begin()) / all.size();
        ks = std::max(ks, std::abs(emp - cdf));
    }
    EXPECT_LT(ks, 0.05);
}

TEST(SamplingTest, BlocksAndValidation) {
    auto rng = mc::sample_stream(1, 0);
    auto eig = mc::sample_block_eigenvalues(3, 6, 4, rng);
    ASSERT_EQ(eig.size(), 4u);
    for (const auto& b : eig) {
        ASSERT_EQ(b.size(), 3u);
        for (double l : b) EXPECT_GT(l, 0.0);
    }
    EXPECT_THROW(mc::sample_block_eigenvalues(3, 2, 1, rng), InvalidParams);
}

TEST(ConditionalTest, MatchesBruteForceGrid) {
    const ChannelParams p(3.0, 0.05, 2.0);
    const double r = 0.6 * rmt::ergodic_rate(p);
    for (int c = 0; c < 10; ++c) {
        auto rng = mc::sample_stream(99, c);
        auto eig = mc::sample_block_eigenvalues(2, 6, 1, rng);
        auto ce = mc::conditional_exponent(eig, r, p);
        double grid_best = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double rho = i / 2000.0;
            for (int j = 0; j < 2000; ++j)
                grid_best = std::max(grid_best, mc::conditional_objective(eig, r, p, rho, j / 2000.0));
        }
        EXPECT_NEAR(ce.value, grid_best, 1e-6) << c;
        EXPECT_GE(ce.value, grid_best - 1e-12) << c;
    }
}

TEST(ConditionalTest, StationaryS) {
    const ChannelParams p(3.0, 0.05, 2.0);
    const double r = 0.8 * rmt::ergodic_rate(p);
    int interior = 0;
    for (int c = 0; c < 20; ++c) {
        auto rng = mc::sample_stream(7, c);
        auto eig = mc::sample_block_eigenvalues(4, 12, 2, rng);
        auto ce = mc::conditional_exponent(eig, r, ChannelParams(3.0, 0.05, 2.0, 2));
        if (!(ce.rho > 0.0 && ce.rho < 1.0)) continue;
        ++interior;
        const double z = (1 + ce.rho) * (1 - ce.s) * p.sigma2();
        double m = 0.0;
        for (const auto& b : eig)
            for (double l : b) m += l / (z + l);
        m /= 8.0;
        EXPECT_LT(std::abs(ce.s - ce.rho / (1 + ce.rho) * m), 1e-8);
    }
    EXPECT_GT(interior, 0);
}

TEST(ConditionalTest, NonNegativeAndZeroOnlyAtRhoZero) {
    const ChannelParams p(3.0, 0.05, 2.0);
    auto rng = mc::sample_stream(3, 0);
    auto eig = mc::sample_block_eigenvalues(2, 6, 1, rng);
    auto hi = mc::conditional_exponent(eig, 100.0, p);
    EXPECT_EQ(hi.value, 0.0);
    EXPECT_EQ(hi.rho, 0.0);
    auto lo = mc::conditional_exponent(eig, 0.5, p);
    EXPECT_GT(lo.value, 0.0);
    EXPECT_GT(lo.rho, 0.0);
}

TEST(ConditionalTest, LocalMaxSanity) {
    const ChannelParams p(3.0, 0.05, 2.0);
    const double r = 0.6 * rmt::ergodic_rate(p);
    std::mt19937_64 probe(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < 25; ++c) {
        auto rng = mc::sample_stream(12, c);
        auto eig = mc::sample_block_eigenvalues(3, 9, 1, rng);
        auto ce = mc::conditional_exponent(eig, r, p);
        EXPECT_GE(ce.value, mc::conditional_objective(eig, r, p, ce.rho, 0.0) - 1e-12);
        for (int k = 0; k < 20; ++k)
            EXPECT_GE(ce.value, mc::conditional_objective(eig, r, p, u(probe), 0.999 * u(probe)) - 1e-12);
    }
}

TEST(EstimateTest, SingleSampleIdentity) {
    auto cfg = config(3, 1, 42);
    auto est = mc::estimate_en(cfg);
    auto rng = mc::sample_stream(42, 0);
    auto eig = mc::sample_block_eigenvalues(3, 9, 1, rng);
    EXPECT_EQ(est.e_n, mc::conditional_exponent(eig, cfg.r, cfg.params).value);
    EXPECT_EQ(est.stderr_e, 0.0);
    EXPECT_EQ(est.ess, 1.0);
    EXPECT_FALSE(est.warning.empty());
}

TEST(EstimateTest, DeterministicAcrossThreads) {
    auto cfg = config(3, 3000, 77);
    auto a = mc::estimate_en(cfg);
    cfg.threads = 4;
    auto b = mc::estimate_en(cfg);
    cfg.threads = 7;
    auto c = mc::estimate_en(cfg);
    EXPECT_EQ(a.e_n, b.e_n);
    EXPECT_EQ(a.e_n, c.e_n);
    EXPECT_EQ(a.stderr_e, b.stderr_e);
    EXPECT_EQ(a.ess, c.ess);
    EXPECT_EQ(a.median_log, c.median_log);
}

TEST(EstimateTest, DecreasingInRate) {
    double prev = INFINITY;
    for (double f : {0.4, 0.5, 0.6, 0.7, 0.8}) {
        auto est = mc::estimate_en(config(2, 4000, 5, f));
        EXPECT_LT(est.e_n, prev) << f;
        prev = est.e_n;
    }
}

TEST(EstimateTest, MoreBlocksDoNotLowerMedian) {
    auto med = [&](int q) {
        const ChannelParams p(3.0, 0.05, 2.0, q);
        const double r = 0.6 * rmt::ergodic_rate(p);
        std::vector<double> v;
        for (int i = 0; i < 1000; ++i) {
            auto rng = mc::sample_stream(31, i);
            v.push_back(mc::conditional_exponent(mc::sample_block_eigenvalues(2, 6, q, rng), r, p).value);
        }
        const double md = median(v);
        double var = 0.0;
        for (double x : v) var += (x - md) * (x - md);
        return std::pair{md, std::sqrt(var / v.size()) * 1.2533 / std::sqrt(double(v.size()))};
    };
    auto [m1, s1] = med(1);
    auto [m4, s4] = med(4);
    EXPECT_GE(m4, m1 - 3 * std::hypot(s1, s4));
}

TEST(AggregateTest, StableForLargeExponents) {
    auto est = mc::aggregate({1000.0, 1000.5, 1001.0}, 10);
    EXPECT_TRUE(std::isfinite(est.e_n));
    EXPECT_GE(est.e_n, 1000.0 - 1e-9);
    EXPECT_LE(est.e_n, 1000.0 + std::log(3.0) / 100.0 + 1e-12);
    EXPECT_NEAR(est.ess, 1.0, 1e-9);
    auto flat = mc::aggregate(std::vector<double>(500, 0.25), 4);
    EXPECT_NEAR(flat.e_n, 0.25, 1e-15);
    EXPECT_NEAR(flat.ess, 500.0, 1e-9);
    EXPECT_TRUE(flat.warning.empty());
}

TEST(ConfigTest, Validation) {
    auto cfg = config(3, 10, 1, 0.6, ChannelParams(1.5, 0.05, 2.0));
    EXPECT_THROW(cfg.validate(), InvalidParams);
    cfg.n = 4;
    EXPECT_EQ(cfg.k(), 6);
    EXPECT_NO_THROW(cfg.validate());
    cfg.num_samples = 0;
    EXPECT_THROW(cfg.validate(), InvalidParams);
}
