#pragma once

// Discrete observability constant for the adjoint system with F = 0:
//
//   C = sup |phi(., 0)|^2 / ( int_0^T int_omega |phi|^2 + delta |phi_T|^2 )
//
// over terminal data phi_T. Without the delta term the denominator form has
// eigenvalues far below double precision on any useful grid, so the quotient
// is relaxed; delta = 0 is allowed but usually breaks the inner solves.
// In the trapezoid inner product at level M the numerator is <A phi_T, phi_T>
// with A phi_T = forward(adjoint(phi_T)(0))(T) and the denominator form is
// the control Gramian plus delta.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "radctl/cg.hpp"
#include "radctl/control.hpp"
#include "radctl/domain.hpp"
#include "radctl/errors.hpp"
#include "radctl/pde.hpp"

namespace radctl {

struct ObservabilityConfig {
    double delta = 1e-6;
    double tol = 1e-12;     ///< relative change of the quotient between sweeps
    int max_iters = 100;
    double cg_tol = 1e-12;
    int cg_max_iters = 20000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(delta >= 0.0)) throw ValidationError("observability.delta", "must be >= 0");
        if (!(tol > 0.0)) throw ValidationError("observability.tol", "must be positive");
        if (max_iters < 1) throw ValidationError("observability.max_iters", "must be >= 1");
        if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ValidationError("observability.cg_tol", "must lie in (0, 1)");
    }
};

struct ObservabilityEstimate {
    double constant = 0.0;
    int iterations = 0;
    double residual = 0.0;
    int N = 0;
    int M = 0;
    double delta = 0.0;
    int cg_iterations = 0;
    std::vector<double> history;      ///< quotient after each sweep
    std::vector<double> maximizer;    ///< normalized phi_T
    double asymmetry_A = 0.0;         ///< dense oracle only
    double asymmetry_B = 0.0;
};

/// A phi_T: adjoint down to t = 0, then the free forward solve back to T.
inline std::vector<double> observability_numerator_apply(std::span<const double> phiT,
                                                         const BoundaryPath& path,
                                                         const SpaceTimeField& a,
                                                         const SchemeConfig& cfg) {
    const auto phi = solve_adjoint(phiT, path, a, cfg);
    const auto y = solve_forward_linear(phi.column(0), path, a, cfg);
    const auto c = y.column(cfg.M);
    return {c.begin(), c.end()};
}

/// Power iteration on (B + delta)^{-1} A with CG inner solves; the
/// Rayleigh quotient of the last iterate is the estimate.
inline ObservabilityEstimate estimate_observability(const BoundaryPath& path, const SpaceTimeField& a,
                                                    const ControlRegion& region,
                                                    const SchemeConfig& cfg,
                                                    const ObservabilityConfig& oc = {}) {
    cfg.validate();
    oc.validate();
    detail::check_path(path, cfg);
    a.require_shape(cfg.N, cfg.M, "potential");
    if (a.max_abs() > 0.0 && !std::isfinite(a.max_abs())) {
        throw PreconditionError("observability needs a bounded potential");
    }
    const int N = cfg.N;
    const double RT = path.radius(cfg.M);
    auto inner = [&](std::span<const double> u, std::span<const double> v) { return l2_inner(u, v, RT); };
    auto applyB = [&](std::span<const double> in, std::span<double> out) {
        const auto g = gramian_apply(in, path, a, region, cfg);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] + oc.delta * in[i];
    };

    ObservabilityEstimate est;
    est.N = N;
    est.M = cfg.M;
    est.delta = oc.delta;

    std::mt19937_64 rng(oc.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(N + 1, 0.0);
    for (int i = 1; i < N; ++i) x[i] = std::sin(std::numbers::pi * i / N) + 0.1 * gauss(rng);
    std::vector<double> Bx(N + 1);

    auto quotient = [&](const std::vector<double>& v, std::vector<double>& Av) {
        Av = observability_numerator_apply(v, path, a, cfg);
        applyB(v, Bx);
        return inner(Av, v) / inner(Bx, v);
    };

    std::vector<double> Ax;
    double mu = quotient(x, Ax);
    for (int k = 1; k <= oc.max_iters; ++k) {
        auto cg = conjugate_gradient(applyB, inner, Ax, oc.cg_tol, oc.cg_max_iters);
        est.cg_iterations += cg.iterations;
        if (!cg.converged) {
            throw ConvergenceError("observability: denominator solve stalled at relative residual " +
                                       std::to_string(cg.final_residual) +
                                       "; the Gramian is numerically singular on this grid, "
                                       "increase delta or refine (N, M)",
                                   cg.residuals);
        }
        x = std::move(cg.x);
        x.front() = 0.0;
        x.back() = 0.0;
        const double nx = std::sqrt(inner(x, x));
        if (!(nx > 0.0)) throw ConvergenceError("observability: iterate vanished", est.history);
        for (double& v : x) v /= nx;
        const double prev = mu;
        mu = quotient(x, Ax);
        est.history.push_back(mu);
        est.iterations = k;
        if (k >= 2 && std::abs(mu - prev) <= oc.tol * std::abs(mu)) break;
        if (k == oc.max_iters) {
            throw ConvergenceError("observability: power iteration stagnated", est.history);
        }
    }
    std::vector<double> r(N + 1);
    for (int i = 0; i <= N; ++i) r[i] = Ax[i] - mu * Bx[i];
    est.residual = std::sqrt(inner(r, r) / inner(Ax, Ax));
    est.constant = mu;
    est.maximizer = std::move(x);
    return est;
}

/// Dense assembly of both quadratic forms from unit terminal data and a
/// direct generalized symmetric eigen-solve. Capped at N <= 32, M <= 64.
inline ObservabilityEstimate dense_oracle(const BoundaryPath& path, const SpaceTimeField& a,
                                          const ControlRegion& region, const SchemeConfig& cfg,
                                          double delta = 1e-6) {
    cfg.validate();
    if (cfg.N > 32 || cfg.M > 64) {
        throw PreconditionError("dense_oracle is limited to N <= 32 and M <= 64");
    }
    detail::check_path(path, cfg);
    const int n = cfg.N - 1;
    const double w = path.radius(cfg.M) / cfg.N;  // trapezoid weight of an interior node

    Eigen::MatrixXd A(n, n), B(n, n);
    std::vector<double> e(cfg.N + 1, 0.0);
    for (int k = 0; k < n; ++k) {
        std::fill(e.begin(), e.end(), 0.0);
        e[k + 1] = 1.0;
        const auto Ae = observability_numerator_apply(e, path, a, cfg);
        const auto Be = gramian_apply(e, path, a, region, cfg);
        for (int i = 0; i < n; ++i) {
            A(i, k) = w * Ae[i + 1];
            B(i, k) = w * Be[i + 1];
        }
    }
    ObservabilityEstimate est;
    est.N = cfg.N;
    est.M = cfg.M;
    est.delta = delta;
    est.asymmetry_A = (A - A.transpose()).norm() / A.norm();
    est.asymmetry_B = (B - B.transpose()).norm() / B.norm();
    const Eigen::MatrixXd As = 0.5 * (A + A.transpose());
    const Eigen::MatrixXd Bs = 0.5 * (B + B.transpose()) + delta * w * Eigen::MatrixXd::Identity(n, n);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(As, Bs);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("dense_oracle: generalized eigen-solve failed; increase delta", {});
    }
    est.constant = solver.eigenvalues()(n - 1);
    const Eigen::VectorXd v = solver.eigenvectors().col(n - 1);
    est.maximizer.assign(cfg.N + 1, 0.0);
    for (int i = 0; i < n; ++i) est.maximizer[i + 1] = v(i);
    const Eigen::VectorXd r = As * v - est.constant * Bs * v;
    est.residual = r.norm() / (As * v).norm();
    return est;
}

} // namespace radctl
