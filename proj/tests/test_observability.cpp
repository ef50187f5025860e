#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "radctl/observability.hpp"
#include "test_support.hpp"

using namespace radctl;
using radctl::testing::sine_mode;

namespace {

struct Bench {
    SchemeConfig cfg;
    BoundaryPath path;
    SpaceTimeField a;

    Bench(int N, int M, double T = 0.5, double theta = 0.6)
        : cfg{N, M, theta}, path(BoundaryPath::constant(1.0, T, M)), a(zero_potential(N, M)) {}
};

} // namespace

TEST(Observability, MatchesDenseOracle) {
    Bench b(16, 32);
    const auto mf = estimate_observability(b.path, b.a, {0.3}, b.cfg);
    const auto dense = dense_oracle(b.path, b.a, {0.3}, b.cfg);
    EXPECT_NEAR(mf.constant, dense.constant, 1e-6 * dense.constant);
    EXPECT_LE(dense.asymmetry_A, 1e-12);
    EXPECT_LE(dense.asymmetry_B, 1e-12);
    EXPECT_LE(mf.residual, 1e-6);
}

TEST(Observability, DenseOracleOnMovingPath) {
    std::mt19937_64 rng(21);
    const SchemeConfig cfg{16, 32, 0.6};
    const auto path = radctl::testing::random_path(rng, 0.5, cfg.M);
    const auto a = radctl::testing::random_potential(rng, cfg.N, cfg.M);
    const auto mf = estimate_observability(path, a, {0.3}, cfg);
    const auto dense = dense_oracle(path, a, {0.3}, cfg);
    EXPECT_NEAR(mf.constant, dense.constant, 1e-6 * dense.constant);
}

TEST(Observability, TinyPotentialIsContinuous) {
    Bench b(16, 32);
    const auto c0 = dense_oracle(b.path, b.a, {0.3}, b.cfg);
    const auto c1 = dense_oracle(b.path, constant_potential(16, 32, 1e-8), {0.3}, b.cfg);
    EXPECT_NEAR(c1.constant, c0.constant, 1e-6 * c0.constant);
}

TEST(Observability, DenseOracleSizeCap) {
    Bench b(40, 32);
    EXPECT_THROW(dense_oracle(b.path, b.a, {0.3}, b.cfg), PreconditionError);
}

TEST(Observability, NonIncreasingInB) {
    Bench b(32, 64);
    double prev = std::numeric_limits<double>::infinity();
    for (double width : {0.2, 0.3, 0.4, 0.6}) {
        const double c = estimate_observability(b.path, b.a, {width}, b.cfg).constant;
        EXPECT_LE(c, prev * (1 + 1e-9)) << "b = " << width;
        prev = c;
    }
}

// With omega the whole interval, R = 1 and a = 0 the discrete sine modes
// diagonalize both forms: mode m decays by g_m per step, so its quotient is
// g^{2M} / (sum_j c_j g^{2(M-j)} + delta). The constant is the largest one,
// and it never exceeds 1/T because |phi(t)| >= |phi(0)|.
TEST(Observability, FullRegionMatchesModalFormula) {
    for (double T : {0.25, 0.5, 1.0}) {
        Bench b(24, 48, T);
        const auto est = estimate_observability(b.path, b.a, {2.0}, b.cfg);
        const double h = 1.0 / 24, dt = T / 48, th = b.cfg.theta, delta = 1e-6;
        double best = 0.0;
        for (int m = 1; m < 24; ++m) {
            const double lam = 4.0 / (h * h) * std::pow(std::sin(m * radctl::testing::kPi * h / 2), 2);
            const double g = (1 - (1 - th) * dt * lam) / (1 + th * dt * lam);
            double den = delta;
            for (int j = 0; j <= 48; ++j) den += time_weight(j, 48, dt) * std::pow(g, 2 * (48 - j));
            best = std::max(best, std::pow(g, 96) / den);
        }
        EXPECT_NEAR(est.constant, best, 1e-8 * best) << "T = " << T;
        EXPECT_LE(est.constant * T, 1.0);
    }
}

TEST(Observability, DominatesEigenmodeQuotient) {
    Bench b(32, 64);
    const auto est = estimate_observability(b.path, b.a, {0.3}, b.cfg);
    const auto phiT = sine_mode(32);
    const auto phi = solve_adjoint(phiT, b.path, b.a, b.cfg);
    const double num = l2_inner(phi.column(0), phi.column(0), 1.0);
    const double den = masked_energy(phi, b.path, {0.3}) + 1e-6 * l2_inner(phiT, phiT, 1.0);
    EXPECT_LE(num / den, est.constant * (1 + 1e-9));
}

TEST(Observability, PotentialChangesEstimateModerately) {
    Bench b(32, 64);
    const double c0 = estimate_observability(b.path, b.a, {0.3}, b.cfg).constant;
    const double c1 = estimate_observability(b.path, constant_potential(32, 64, 1.0), {0.3}, b.cfg).constant;
    // A constant positive potential damps phi(0) more than the observed energy.
    EXPECT_GT(c1, 0.0);
    EXPECT_LT(c1, c0);
}

TEST(Observability, ConfigValidation) {
    ObservabilityConfig oc;
    oc.delta = -1.0;
    EXPECT_THROW(oc.validate(), ValidationError);
}
