#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gallager/saddlepoint.hpp"
#include "oracles.hpp"

using namespace gallager;

namespace {

const ChannelParams kFig(3.0, 0.05, 2.0, 1);

void expect_converged(const saddle::SaddleSolution& sol) {
    EXPECT_LT(std::abs(sol.residuals.edge), 1e-10);
    EXPECT_LT(std::abs(sol.residuals.s_equation), 1e-10);
    EXPECT_LT(std::abs(sol.residuals.normalization), 1e-10 * (1.0 + sol.b));
    EXPECT_GE(sol.a, 0.0);
    EXPECT_LT(sol.a, sol.b);
    EXPECT_GT(sol.z, 0.0);
    EXPECT_GE(sol.s, 0.0);
    EXPECT_LT(sol.s, 1.0);
}

}  // namespace

TEST(ZOfTest, Examples) {
    EXPECT_DOUBLE_EQ(saddle::z_of(0.0, 0.0, kFig), 0.05);
    EXPECT_DOUBLE_EQ(saddle::z_of(1.0, 0.0, kFig), 0.10);
    EXPECT_DOUBLE_EQ(saddle::z_of(1.0, 0.5, ChannelParams(3.0, 1.0, 2.0)), 1.0);
}

TEST(EndpointsTest, ZeroRhoGivesMpEdges) {
    for (double s : {0.0, 0.3}) {
        auto e = saddle::solve_endpoints(0.0, s, kFig);
        EXPECT_NEAR(e.a, 0.535898384862245, 1e-10);
        EXPECT_NEAR(e.b, 7.464101615137754, 1e-10);
    }
    auto sq = saddle::solve_endpoints(0.0, 0.0, ChannelParams(1.0, 0.05, 2.0));
    EXPECT_EQ(sq.a, 0.0);
    EXPECT_TRUE(sq.zero_lower_edge);
    EXPECT_NEAR(sq.b, 4.0, 1e-10);
}

TEST(EndpointsTest, RejectsBadInputs) {
    EXPECT_THROW(saddle::solve_endpoints(-0.1, 0.0, kFig), InvalidParams);
    EXPECT_THROW(saddle::solve_endpoints(1.0, 1.0, kFig), InvalidParams);
    EXPECT_THROW(saddle::solve_saddle(NAN, kFig), InvalidParams);
}

TEST(SaddleTest, JointSolveConvergesOnGrid) {
    for (double beta : {1.0, 1.0001, 1.5, 3.0})
        for (double alpha : {2.0, 20.0})
            for (double rho : {0.0, 0.25, 1.0, 5.0}) {
                const ChannelParams p(beta, 0.05, alpha);
                auto sol = saddle::solve_saddle(rho, p);
                SCOPED_TRACE(testing::Message() << beta << " " << alpha << " " << rho);
                expect_converged(sol);
            }
}

TEST(SaddleTest, FigureParametersRhoOne) {
    auto sol = saddle::solve_saddle(1.0, kFig);
    expect_converged(sol);
    EXPECT_GT(sol.s, 0.0);
    EXPECT_LT(sol.s, 1.0);
    EXPECT_NEAR(sol.s - saddle::s_stationary(sol.rho, sol.a, sol.b, sol.z, kFig), 0.0, 1e-10);
    EXPECT_LT(std::abs(saddle::edge_residual(sol.a, sol.b, 1.0, sol.z, kFig)), 1e-10);
    EXPECT_LT(std::abs(saddle::normalization_residual(sol.a, sol.b, 1.0, sol.z, kFig)), 1e-9);
}

TEST(SaddleTest, ZeroRhoIsMpWithZeroS) {
    auto sol = saddle::solve_saddle(0.0, kFig);
    EXPECT_EQ(sol.s, 0.0);
    EXPECT_NEAR(sol.a, rmt::mp_support(kFig).a0, 1e-10);
    EXPECT_NEAR(sol.b, rmt::mp_support(kFig).b0, 1e-10);
}

TEST(SaddleTest, AveragePowerPinsS) {
    for (double rho : {0.3, 1.0}) {
        auto sol = saddle::solve_saddle(rho, kFig, Mode::AveragePower);
        EXPECT_EQ(sol.s, 0.0);
        EXPECT_EQ(sol.residuals.s_equation, 0.0);
        auto e = saddle::solve_endpoints(rho, 0.0, kFig);
        EXPECT_EQ(sol.a, e.a);
        EXPECT_EQ(sol.b, e.b);
        EXPECT_DOUBLE_EQ(sol.z, (1.0 + rho) * 0.05);
    }
}

TEST(SaddleTest, StationarySMatchesDensityIntegral) {
    // s is rho/(1+rho) times the p*-average of x/(x+z).
    for (double beta : {1.0, 3.0})
        for (double rho : {0.25, 1.0}) {
            const ChannelParams p(beta, 0.05, 2.0);
            auto sol = saddle::solve_saddle(rho, p);
            const double q = oracle::pstar_moment(sol, p, [&](double x) { return x / (x + sol.z); });
            EXPECT_NEAR(sol.s, rho / (1.0 + rho) * q, 1e-9);
        }
}

TEST(SaddleTest, SquareBranchSwitchNearOne) {
    const ChannelParams p(1.0 + 1e-7, 0.05, 2.0);
    auto sol = saddle::solve_saddle(0.5, p);
    EXPECT_TRUE(sol.zero_lower_edge);
    EXPECT_EQ(sol.a, 0.0);
    const ChannelParams q(1.5, 0.05, 2.0);
    EXPECT_FALSE(saddle::solve_saddle(0.5, q).zero_lower_edge);
}

TEST(DensityTest, VanishesAtEdges) {
    auto sol = saddle::solve_saddle(0.5, kFig);
    EXPECT_EQ(saddle::pstar_density(sol.a, sol, kFig), 0.0);
    EXPECT_EQ(saddle::pstar_density(sol.b, sol, kFig), 0.0);
    EXPECT_EQ(saddle::pstar_density(sol.b + 1.0, sol, kFig), 0.0);
}

TEST(DensityTest, ZeroRhoEqualsMp) {
    for (double beta : {1.0, 3.0}) {
        const ChannelParams p(beta, 0.05, 2.0);
        auto sol = saddle::solve_saddle(0.0, p);
        double worst = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double x = 9.0 * i / 2000.0;
            worst = std::max(worst, std::abs(saddle::pstar_density(x, sol, p) - rmt::mp_density(x, p)));
        }
        EXPECT_LT(worst, 1e-10) << beta;
    }
}

TEST(DensityTest, UnitMassAndNonNegative) {
    for (double beta : {1.0, 3.0})
        for (double rho : {0.25, 0.5, 1.0}) {
            const ChannelParams p(beta, 0.05, 2.0);
            auto sol = saddle::solve_saddle(rho, p);
            EXPECT_NEAR(oracle::pstar_moment(sol, p, [](double) { return 1.0; }), 1.0, 1e-8);
            for (int i = 0; i <= 500; ++i) {
                const double x = sol.a + (sol.b - sol.a) * i / 500.0;
                EXPECT_GE(saddle::pstar_density(x, sol, p), 0.0);
            }
        }
}

TEST(RateMapTest, SmallRhoGivesErgodicRate) {
    for (double beta : {1.0, 1.5, 3.0}) {
        const ChannelParams p(beta, 0.05, 2.0);
        EXPECT_NEAR(saddle::rbar(1e-8, p), rmt::ergodic_rate(p), 1e-6);
    }
}

TEST(RateMapTest, ClosedFormMatchesIntegral) {
    for (double beta : {1.0, 3.0})
        for (double alpha : {2.0, 20.0})
            for (double rho : {0.25, 0.5, 1.0}) {
                const ChannelParams p(beta, 0.05, alpha);
                auto sol = saddle::solve_saddle(rho, p);
                EXPECT_NEAR(saddle::rbar_at(sol, p), oracle::rbar_integral(sol, p), 1e-8);
            }
}

TEST(RateMapTest, StrictlyDecreasing) {
    for (double beta : {1.0, 3.0})
        for (Mode m : {Mode::PeakPower, Mode::AveragePower}) {
            const ChannelParams p(beta, 0.05, 2.0);
            double prev = saddle::rbar(0.0, p, m);
            for (int i = 1; i <= 50; ++i) {
                const double cur = saddle::rbar(2.0 * i / 50.0, p, m);
                EXPECT_LT(cur, prev) << beta << " " << i;
                prev = cur;
            }
        }
}

TEST(RhoOfRateTest, Regimes) {
    const double re = rmt::ergodic_rate(kFig);
    const double r1 = saddle::r1(kFig);
    EXPECT_EQ(saddle::rho_of_rate(re, kFig), 0.0);
    EXPECT_EQ(saddle::rho_of_rate(1.1 * re, kFig), 0.0);
    const double r = r1 * 1.01;
    const double rho = saddle::rho_of_rate(r, kFig);
    EXPECT_GT(rho, 0.0);
    EXPECT_LT(rho, 1.0);
    EXPECT_NEAR(saddle::rbar(rho, kFig), r, 1e-10);
    EXPECT_EQ(saddle::rho_of_rate(0.9 * r1, kFig), 1.0);
    const double sp = saddle::rho_of_rate(0.9 * r1, kFig, Mode::SpherePacking);
    EXPECT_GT(sp, 1.0);
    EXPECT_NEAR(saddle::rbar(sp, kFig), 0.9 * r1, 1e-10);
    EXPECT_THROW(saddle::rho_of_rate(0.0, kFig), InvalidParams);
}

TEST(RhoOfRateTest, SpherePackingCap) {
    saddle::RhoOptions tight;
    tight.rho_max = 4.0;
    EXPECT_THROW(saddle::rho_of_rate(0.01 * rmt::ergodic_rate(kFig), kFig, Mode::SpherePacking, tight), SolverError);
}

TEST(NormalizationTest, MassIncreasingInB) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const double beta = 1.0 + 4.0 * u01(rng);
        const double s2 = std::pow(10.0, -2.0 + 2.0 * u01(rng));
        const double alpha = 0.5 + 30.0 * u01(rng);
        const double rho = 2.0 * u01(rng);
        const double s = 0.9 * rho / (1.0 + rho) * u01(rng);
        const ChannelParams p(beta, s2, alpha);
        const double z = saddle::z_of(rho, s, p);
        auto [lo, hi] = saddle::b_bracket(rho, z, p, false);
        double prev = -INFINITY;
        for (int i = 0; i <= 200; ++i) {
            const double b = lo + (hi - lo) * i / 200.0;
            auto n = saddle::normalization_mass(b, rho, z, p);
            if (!n) continue;  // below the range where a(b) exists
            EXPECT_GT(*n, prev) << t << " " << b;
            prev = *n;
        }
    }
}

TEST(EdgeLowerTest, SolvesEdgeEquation) {
    const double z = 0.1;
    auto a = saddle::edge_lower(6.0, 1.0, z, kFig);
    ASSERT_TRUE(a.has_value());
    EXPECT_NEAR(saddle::edge_residual(*a, 6.0, 1.0, z, kFig), 0.0, 1e-12);
    EXPECT_FALSE(saddle::edge_lower(1e-3, 1.0, z, kFig).has_value());
}
