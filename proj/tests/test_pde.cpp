#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "radctl/pde.hpp"
#include "test_support.hpp"

namespace radctl {
namespace {

using testing::kPi;
using testing::sine_mode;

double eigenmode_error(int N, int M, double T, double c, double theta = 0.5) {
    SchemeConfig cfg{N, M, theta, 2};
    auto path = BoundaryPath::constant(1.0, T, M);
    auto z0 = sine_mode(N);
    auto sol = solve_forward_linear(z0, path, constant_potential(N, M, c), cfg);
    std::vector<double> diff(N + 1);
    const double amp = std::exp(-(kPi * kPi + c) * T);
    for (int i = 0; i <= N; ++i) diff[i] = sol(i, M) - amp * z0[i];
    return l2_norm(diff, 1.0);
}

TEST(ForwardLinear, ZeroDataGivesZeroSolution) {
    SchemeConfig cfg{16, 20, 0.5, 2};
    std::mt19937_64 rng(1);
    auto path = testing::random_path(rng, 0.3, cfg.M);
    std::vector<double> z0(cfg.N + 1, 0.0);
    auto sol = solve_forward_linear(z0, path, testing::random_potential(rng, cfg.N, cfg.M), cfg);
    EXPECT_EQ(sol.max_abs(), 0.0);
}

TEST(ForwardLinear, EigenmodeDecay) {
    // sin(pi rho) e^{-pi^2 T}; CN error is O(h^2 + dt^2).
    const double err = eigenmode_error(50, 100, 0.1, 0.0);
    EXPECT_LT(err, 1e-3);
    const double exact_amp = std::exp(-kPi * kPi / 10.0);
    EXPECT_NEAR(exact_amp, 0.372707, 1e-6);
}

TEST(ForwardLinear, ConstantPotentialShiftsDecayRate) {
    const double c = 2.5;
    const double err = eigenmode_error(50, 100, 0.1, c);
    EXPECT_LT(err, 1e-3);
    EXPECT_LT(eigenmode_error(100, 200, 0.1, c), err / 3.5);
}

TEST(ForwardLinear, SecondOrderConvergence) {
    const double e1 = eigenmode_error(50, 100, 0.1, 0.0);
    const double e2 = eigenmode_error(100, 200, 0.1, 0.0);
    EXPECT_GE(e1 / e2, 3.5);
}

TEST(ForwardLinear, BackwardEulerIsFirstOrderInTime) {
    // With dt tied to h the theta = 1 error is dominated by the O(dt) term.
    const double e1 = eigenmode_error(50, 100, 0.1, 0.0, 1.0);
    const double e2 = eigenmode_error(100, 200, 0.1, 0.0, 1.0);
    EXPECT_GT(e1 / e2, 1.8);
    EXPECT_LT(e1 / e2, 2.5);
}

TEST(ForwardLinear, MatchesDenseModelOnMovingPath) {
    SchemeConfig cfg{12, 16, 0.5, 2};
    std::mt19937_64 rng(7);
    auto path = testing::random_path(rng, 0.4, cfg.M);
    auto a = testing::random_potential(rng, cfg.N, cfg.M);
    auto z0 = testing::random_dirichlet(rng, cfg.N);
    auto sol = solve_forward_linear(z0, path, a, cfg);

    testing::DenseScheme dense(path, a, cfg.theta);
    Eigen::VectorXd expect = dense.propagator(0) * testing::DenseScheme::interior(z0);
    for (int k = 0; k < dense.size(); ++k) {
        EXPECT_NEAR(sol(k + 1, cfg.M), expect[k], 1e-12 * (1.0 + std::abs(expect[k])));
    }
}

TEST(ForwardLinear, DirichletRowsStayZero) {
    SchemeConfig cfg{20, 30, 0.5, 2};
    std::mt19937_64 rng(3);
    auto path = testing::random_path(rng, 0.5, cfg.M);
    SpaceTimeField src(FieldRole::Source, cfg.N, cfg.M, 1.0);
    auto sol = solve_forward_linear(testing::random_dirichlet(rng, cfg.N), path,
                                    testing::random_potential(rng, cfg.N, cfg.M), src, cfg);
    EXPECT_EQ(sol.dirichlet_defect(), 0.0);
}

TEST(ForwardLinear, MaximumPrincipleWithImplicitEuler) {
    SchemeConfig cfg{40, 60, 1.0, 2};
    auto path = BoundaryPath::constant(1.0, 0.5, cfg.M);
    std::mt19937_64 rng(11);
    auto a = testing::random_potential(rng, cfg.N, cfg.M);
    for (double& v : a.values()) v = std::abs(v);
    std::vector<double> z0(cfg.N + 1, 0.0);
    for (int i = 1; i < cfg.N; ++i) z0[i] = (i % 7 == 0) ? 1.0 : 0.1 * std::sin(0.3 * i);
    auto sol = solve_forward_linear(z0, path, a, cfg);
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= cfg.M; ++j) {
        double m = 0.0;
        for (double v : sol.column(j)) m = std::max(m, std::abs(v));
        EXPECT_LE(m, prev + 1e-15) << "level " << j;
        prev = m;
    }
}

TEST(ForwardLinear, ControlSourceIsMasked) {
    SchemeConfig cfg{20, 20, 0.5, 2};
    auto path = BoundaryPath::constant(1.0, 0.2, cfg.M);
    std::vector<double> z0(cfg.N + 1, 0.0);
    SpaceTimeField control(FieldRole::Control, cfg.N, cfg.M, 0.0);
    // Mass only outside [0, 0.3): the masked run must stay identically zero.
    for (int j = 0; j <= cfg.M; ++j) {
        for (int i = 8; i < cfg.N; ++i) control(i, j) = 1.0;
    }
    auto sol = solve_forward_linear(z0, path, zero_potential(cfg.N, cfg.M), control, cfg,
                                    ControlRegion{0.3});
    EXPECT_EQ(sol.max_abs(), 0.0);

    EXPECT_THROW(solve_forward_linear(z0, path, zero_potential(cfg.N, cfg.M), control, cfg),
                 PreconditionError);
}

TEST(ForwardLinear, RejectsBadInput) {
    SchemeConfig cfg{16, 16, 0.5, 2};
    auto path = BoundaryPath::constant(1.0, 0.2, cfg.M);
    std::vector<double> short_data(cfg.N, 0.0);
    EXPECT_THROW(solve_forward_linear(short_data, path, zero_potential(cfg.N, cfg.M), cfg),
                 DimensionError);
    auto bad = sine_mode(cfg.N);
    bad[0] = 1.0;
    EXPECT_THROW(solve_forward_linear(bad, path, zero_potential(cfg.N, cfg.M), cfg),
                 PreconditionError);
    auto wrong_path = BoundaryPath::constant(1.0, 0.2, cfg.M + 1);
    EXPECT_THROW(solve_forward_linear(sine_mode(cfg.N), wrong_path, zero_potential(cfg.N, cfg.M), cfg),
                 DimensionError);
    SchemeConfig tiny{4, 16, 0.5, 2};
    EXPECT_THROW(tiny.validate(), ValidationError);
    SchemeConfig theta{16, 16, 0.3, 2};
    EXPECT_THROW(theta.validate(), ValidationError);
}

TEST(ForwardLinear, NonFinitePotentialRaisesInstability) {
    SchemeConfig cfg{16, 16, 0.5, 2};
    auto path = BoundaryPath::constant(1.0, 0.2, cfg.M);
    auto a = zero_potential(cfg.N, cfg.M);
    a(5, 3) = std::numeric_limits<double>::quiet_NaN();
    try {
        solve_forward_linear(sine_mode(cfg.N), path, a, cfg);
        FAIL() << "expected InstabilityError";
    } catch (const InstabilityError& e) {
        EXPECT_EQ(e.suggested_m(), 2 * cfg.M);
    }
}

TEST(Semilinear, ZeroNonlinearityIsBitwiseLinear) {
    SchemeConfig cfg{24, 30, 0.5, 2};
    std::mt19937_64 rng(5);
    auto path = testing::random_path(rng, 0.5, cfg.M);
    SpaceTimeField control(FieldRole::Control, cfg.N, cfg.M);
    std::normal_distribution<double> g;
    for (double& v : control.values()) v = g(rng);
    auto z0 = testing::random_dirichlet(rng, cfg.N);
    ControlRegion omega{0.3};
    auto lin = solve_forward_linear(z0, path, zero_potential(cfg.N, cfg.M), control, cfg, omega);
    auto semi = solve_semilinear(z0, path, control, Nonlinearity::zero(), cfg, omega);
    EXPECT_EQ(lin.values(), semi.values());
}

TEST(Semilinear, LinearReactionMatchesUnitPotentialToFirstOrder) {
    auto run = [](int M) {
        SchemeConfig cfg{40, M, 0.5, 2};
        auto path = BoundaryPath::constant(1.0, 0.2, M);
        auto z0 = sine_mode(cfg.N);
        SpaceTimeField none(FieldRole::Control, cfg.N, M);
        auto lin = solve_forward_linear(z0, path, constant_potential(cfg.N, M, 1.0), cfg);
        auto semi = solve_semilinear(z0, path, none, Nonlinearity::linear(1.0), cfg, ControlRegion{0.3});
        double d = 0.0;
        for (std::size_t k = 0; k < lin.values().size(); ++k) {
            d = std::max(d, std::abs(lin.values()[k] - semi.values()[k]));
        }
        return d;
    };
    const double d1 = run(40), d2 = run(80);
    EXPECT_LT(d1, 5e-3);
    EXPECT_GT(d1 / d2, 1.7);
}

TEST(Semilinear, ZeroDataStaysZero) {
    SchemeConfig cfg{16, 16, 0.5, 2};
    auto path = BoundaryPath::constant(1.0, 0.2, cfg.M);
    std::vector<double> z0(cfg.N + 1, 0.0);
    SpaceTimeField none(FieldRole::Control, cfg.N, cfg.M);
    auto sol = solve_semilinear(z0, path, none, Nonlinearity::sine(), cfg, ControlRegion{0.3});
    EXPECT_EQ(sol.max_abs(), 0.0);
}

TEST(Adjoint, ZeroDataGivesZero) {
    SchemeConfig cfg{16, 16, 0.5, 2};
    auto path = BoundaryPath::constant(1.0, 0.2, cfg.M);
    std::vector<double> phiT(cfg.N + 1, 0.0);
    auto phi = solve_adjoint(phiT, path, zero_potential(cfg.N, cfg.M), cfg);
    EXPECT_EQ(phi.max_abs(), 0.0);
    EXPECT_EQ(phi.role(), FieldRole::Adjoint);
}

TEST(Adjoint, EigenmodeDecaysBackward) {
    SchemeConfig cfg{50, 100, 0.5, 2};
    const double T = 0.1;
    auto path = BoundaryPath::constant(1.0, T, cfg.M);
    auto phiT = sine_mode(cfg.N);
    auto phi = solve_adjoint(phiT, path, zero_potential(cfg.N, cfg.M), cfg);
    std::vector<double> diff(cfg.N + 1);
    for (int i = 0; i <= cfg.N; ++i) diff[i] = phi(i, 0) - std::exp(-kPi * kPi * T) * phiT[i];
    EXPECT_LT(l2_norm(diff, 1.0), 1e-3);
}

TEST(Adjoint, DiscreteDualityOnMovingPaths) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        SchemeConfig cfg{30, 40, trial % 2 ? 1.0 : 0.5, 2};
        auto path = testing::random_path(rng, 0.5, cfg.M);
        auto a = testing::random_potential(rng, cfg.N, cfg.M);
        auto z0 = testing::random_dirichlet(rng, cfg.N);
        auto phiT = testing::random_dirichlet(rng, cfg.N);
        auto z = solve_forward_linear(z0, path, a, cfg);
        auto phi = solve_adjoint(phiT, path, a, cfg);
        const double lhs = l2_inner(z.column(cfg.M), phiT, path.radius(cfg.M));
        const double rhs = l2_inner(z0, phi.column(0), path.radius(0));
        const double scale = l2_norm(z0, path.radius(0)) * l2_norm(phiT, path.radius(cfg.M));
        EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
    }
}

TEST(Adjoint, MatchesDenseTranspose) {
    SchemeConfig cfg{10, 12, 0.5, 2};
    std::mt19937_64 rng(99);
    auto path = testing::random_path(rng, 0.3, cfg.M);
    auto a = testing::random_potential(rng, cfg.N, cfg.M);
    auto phiT = testing::random_dirichlet(rng, cfg.N);
    auto phi = solve_adjoint(phiT, path, a, cfg);
    testing::DenseScheme dense(path, a, cfg.theta);
    Eigen::VectorXd expect = dense.adjoint_propagator(0) * testing::DenseScheme::interior(phiT);
    for (int k = 0; k < dense.size(); ++k) {
        EXPECT_NEAR(phi(k + 1, 0), expect[k], 1e-12 * (1.0 + std::abs(expect[k])));
    }
}

TEST(BoundaryFlux, SineEndpointSlope) {
    for (int order : {1, 2}) {
        double prev_err = 0.0;
        for (int N : {20, 40, 80}) {
            SpaceTimeField f(FieldRole::State, N, 8);
            auto s = sine_mode(N);
            std::copy(s.begin(), s.end(), f.column(0).begin());
            auto path = BoundaryPath::constant(1.0, 0.1, 8);
            const double err = std::abs(boundary_flux(f, path, 0, order) + kPi);
            if (prev_err > 0.0) {
                EXPECT_GT(prev_err / err, order == 1 ? 1.8 : 3.6) << "order " << order;
            }
            prev_err = err;
        }
    }
}

TEST(BoundaryFlux, ScalesWithRadius) {
    const int N = 64;
    SpaceTimeField f(FieldRole::State, N, 8);
    auto s = sine_mode(N);
    std::copy(s.begin(), s.end(), f.column(2).begin());
    auto path = BoundaryPath::constant(2.0, 0.1, 8);
    // z~(r) = sin(pi r / 2) on [0, 2] has z~_r(2) = -pi/2.
    EXPECT_NEAR(boundary_flux(f, path, 2), -kPi / 2.0, 2e-3);
}

TEST(BoundaryFlux, ContractChecks) {
    const int N = 16;
    auto path = BoundaryPath::constant(1.0, 0.1, 8);
    SpaceTimeField zero(FieldRole::State, N, 8);
    EXPECT_EQ(boundary_flux(zero, path, 3), 0.0);

    SpaceTimeField bad(FieldRole::State, N, 8);
    for (int i = 0; i <= N; ++i) {
        const double rho = static_cast<double>(i) / N;
        bad(i, 0) = 1.0 - rho * rho;
    }
    EXPECT_THROW(boundary_flux(bad, path, 0), PreconditionError);

    SpaceTimeField pot(FieldRole::Potential, N, 8);
    EXPECT_THROW(boundary_flux(pot, path, 0), PreconditionError);
}

} // namespace
} // namespace radctl
