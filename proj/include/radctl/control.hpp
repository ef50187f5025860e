#pragma once

// Penalized HUM on a prescribed path. The Gramian maps terminal adjoint data
// phi_T to the state at T produced by the control 1_omega phi from zero data.
// With the exact discrete adjoint it is symmetric under the trapezoid inner
// product at level M, which is what CG needs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radctl/cg.hpp"
#include "radctl/domain.hpp"
#include "radctl/errors.hpp"
#include "radctl/pde.hpp"

namespace radctl {

enum class HUMVariant { QuadraticPenalty, ExactNonsmooth };

inline std::string to_string(HUMVariant v) {
    return v == HUMVariant::QuadraticPenalty ? "quadratic-penalty" : "exact-nonsmooth";
}

inline HUMVariant parse_hum_variant(const std::string& s) {
    if (s == "quadratic-penalty" || s == "quadratic") return HUMVariant::QuadraticPenalty;
    if (s == "exact-nonsmooth" || s == "nonsmooth") return HUMVariant::ExactNonsmooth;
    throw ValidationError("hum.variant", "unknown variant '" + s + "'");
}

struct HUMConfig {
    double epsilon = 1e-4;
    HUMVariant variant = HUMVariant::QuadraticPenalty;
    double cg_tol = 1e-10;
    int cg_max_iters = 2000;
    int prox_steps = 20000;

    void validate() const {
        if (!(epsilon > 0.0)) throw ValidationError("hum.epsilon", "must be positive");
        if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ValidationError("hum.cg_tol", "must lie in (0, 1)");
        if (cg_max_iters < 1) throw ValidationError("hum.cg_max_iters", "must be >= 1");
        if (prox_steps < 1) throw ValidationError("hum.prox_steps", "must be >= 1");
    }
};

struct HUMOutcome {
    HUMVariant variant = HUMVariant::QuadraticPenalty;
    double epsilon = 0.0;
    std::vector<double> phiT_star;
    std::vector<double> y_free_T;  ///< uncontrolled state at T
    SpaceTimeField control;        ///< role Control, zero outside omega
    SpaceTimeField state;          ///< controlled trajectory
    double final_norm = 0.0;
    double cost = 0.0;
    double initial_h1 = 0.0;
    double cost_ratio = 0.0;
    bool degenerate = false;       ///< z0 == 0, ratio reported as 0
    double J_value = 0.0;
    int cg_iters = 0;              ///< CG iterations, or proximal steps for the nonsmooth variant
    bool converged = true;
    std::vector<double> residual_history;
    double optimality_residual = 0.0;
};

/// Applies the control mask in place for level j.
inline void apply_mask(std::span<double> col, double radius, const ControlRegion& region) {
    const int n = static_cast<int>(col.size()) - 1;
    for (int i = 0; i <= n; ++i) {
        if (!region.contains(static_cast<double>(i) / n, radius)) col[i] = 0.0;
    }
}

/// Copy of an adjoint field restricted to omega, tagged as a control.
inline SpaceTimeField masked_control(const SpaceTimeField& phi, const BoundaryPath& path,
                                     const ControlRegion& region) {
    SpaceTimeField v = phi;
    v.set_role(FieldRole::Control);
    for (int j = 0; j <= v.M(); ++j) apply_mask(v.column(j), path.radius(j), region);
    return v;
}

/// int_0^T int_omega |v|^2 dr dt with trapezoid weights in r and t.
inline double masked_energy(const SpaceTimeField& v, const BoundaryPath& path,
                            const ControlRegion& region) {
    std::vector<double> col(v.N() + 1);
    double sum = 0.0;
    for (int j = 0; j <= v.M(); ++j) {
        const auto c = v.column(j);
        std::copy(c.begin(), c.end(), col.begin());
        apply_mask(col, path.radius(j), region);
        sum += time_weight(j, v.M(), path.dt()) * l2_inner(col, col, path.radius(j));
    }
    return sum;
}

/// Lambda phi_T: adjoint backward (F = 0), mask, forward from zero data.
inline std::vector<double> gramian_apply(std::span<const double> phiT, const BoundaryPath& path,
                                         const SpaceTimeField& a, const ControlRegion& region,
                                         const SchemeConfig& cfg) {
    const auto phi = solve_adjoint(phiT, path, a, cfg);
    const std::vector<double> zero(cfg.N + 1, 0.0);
    const auto y = solve_forward_linear(zero, path, a, masked_control(phi, path, region), cfg, region);
    const auto last = y.column(cfg.M);
    return {last.begin(), last.end()};
}

namespace detail {

inline std::vector<double> prox_steps(const std::vector<double>& y_free, const BoundaryPath& path,
                                      const SpaceTimeField& a, const ControlRegion& region,
                                      const SchemeConfig& cfg, const HUMConfig& hum,
                                      HUMOutcome& out) {
    const double RT = path.radius(cfg.M);
    const std::size_t n = y_free.size();
    auto inner = [&](std::span<const double> u, std::span<const double> v) { return l2_inner(u, v, RT); };

    // Power iteration for the Lipschitz constant of the smooth part.
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) v[i] = std::sin(std::numbers::pi * i / (n - 1)) + 0.1 * std::cos(3.0 * i);
    double L = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double nv = std::sqrt(inner(v, v));
        for (double& x : v) x /= nv;
        auto w = gramian_apply(v, path, a, region, cfg);
        L = inner(v, w);
        v = std::move(w);
    }
    L = std::max(L * 1.05, 1e-300);
    const double tau = 1.0 / L;

    std::vector<double> x(n, 0.0), x_prev(n, 0.0), z(n, 0.0);
    double t = 1.0;
    out.converged = false;
    for (int k = 0; k < hum.prox_steps; ++k) {
        auto g = gramian_apply(z, path, a, region, cfg);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = z[i] - tau * (g[i] + y_free[i]);
        const double nu = std::sqrt(inner(u, u));
        const double shrink = nu > 0.0 ? std::max(0.0, 1.0 - tau * hum.epsilon / nu) : 0.0;
        x_prev = x;
        for (std::size_t i = 0; i < n; ++i) x[i] = shrink * u[i];

        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - x_prev[i];
        const double step = std::sqrt(inner(d, d));
        const double xn = std::sqrt(inner(x, x));
        out.residual_history.push_back(xn > 0.0 ? step / xn : step);
        out.cg_iters = k + 1;
        if (step <= hum.cg_tol * std::max(xn, std::numeric_limits<double>::min())) {
            out.converged = true;
            break;
        }
        // Adaptive restart keeps FISTA monotone on ill-conditioned Gramians.
        double restart = 0.0;
        for (std::size_t i = 0; i < n; ++i) restart += (z[i] - x[i]) * d[i];
        if (restart > 0.0) t = 1.0;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + (t - 1.0) / t_next * d[i];
        t = t_next;
    }
    return x;
}

} // namespace detail

/// Minimizes the penalized dual functional for initial data z0 on `path`.
inline HUMOutcome minimize_J(std::span<const double> z0, const BoundaryPath& path,
                             const SpaceTimeField& a, const ControlRegion& region,
                             const SchemeConfig& cfg, const HUMConfig& hum) {
    hum.validate();
    cfg.validate();
    HUMOutcome out;
    out.variant = hum.variant;
    out.epsilon = hum.epsilon;

    const auto free = solve_forward_linear(z0, path, a, cfg);
    const auto fT = free.column(cfg.M);
    out.y_free_T.assign(fT.begin(), fT.end());
    const double RT = path.radius(cfg.M);
    auto inner = [&](std::span<const double> u, std::span<const double> v) { return l2_inner(u, v, RT); };

    if (hum.variant == HUMVariant::QuadraticPenalty) {
        std::vector<double> rhs(out.y_free_T.size());
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -out.y_free_T[i];
        auto apply = [&](std::span<const double> in, std::span<double> o) {
            const auto g = gramian_apply(in, path, a, region, cfg);
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = g[i] + hum.epsilon * in[i];
        };
        auto cg = conjugate_gradient(apply, inner, rhs, hum.cg_tol, hum.cg_max_iters);
        out.cg_iters = cg.iterations;
        out.residual_history = cg.residuals;
        if (!cg.converged) {
            throw ConvergenceError("HUM conjugate gradient stopped at relative residual " +
                                       std::to_string(cg.final_residual) + " after " +
                                       std::to_string(cg.iterations) + " iterations",
                                   cg.residuals);
        }
        out.phiT_star = std::move(cg.x);
    } else {
        out.phiT_star = detail::prox_steps(out.y_free_T, path, a, region, cfg, hum, out);
    }
    out.phiT_star.front() = 0.0;
    out.phiT_star.back() = 0.0;

    const auto phi = solve_adjoint(out.phiT_star, path, a, cfg);
    out.control = masked_control(phi, path, region);
    out.state = solve_forward_linear(z0, path, a, out.control, cfg, region);
    const auto zT = out.state.column(cfg.M);
    out.final_norm = l2_norm(zT, RT);

    const double energy = masked_energy(phi, path, region);
    out.cost = std::sqrt(energy);
    out.initial_h1 = h1_seminorm(z0, path.radius(0));
    out.degenerate = !(out.initial_h1 > 0.0);
    out.cost_ratio = out.degenerate ? 0.0 : out.cost / out.initial_h1;

    const double phiT_norm = std::sqrt(inner(out.phiT_star, out.phiT_star));
    const double pairing = l2_inner(phi.column(0), z0, path.radius(0));
    const double penalty = hum.variant == HUMVariant::QuadraticPenalty
                               ? 0.5 * hum.epsilon * phiT_norm * phiT_norm
                               : hum.epsilon * phiT_norm;
    out.J_value = 0.5 * energy + penalty + pairing;

    // zT = y_free + Lambda phi, so (Lambda + eps) phi + y_free = zT + eps phi.
    std::vector<double> opt(zT.size());
    for (std::size_t i = 0; i < opt.size(); ++i) opt[i] = zT[i] + hum.epsilon * out.phiT_star[i];
    const double yn = std::sqrt(inner(out.y_free_T, out.y_free_T));
    out.optimality_residual = yn > 0.0 ? std::sqrt(inner(opt, opt)) / yn : 0.0;
    return out;
}

struct CostReport {
    double cost_ratio = 0.0;
    bool degenerate = false;
    double R_star = 0.0;
    double E = 0.0;
    double b = 0.0;
    double max_abs_dR = 0.0;
    double max_abs_a = 0.0;
    double T = 0.0;
};

inline CostReport control_cost_report(const HUMOutcome& outcome, const PhysicalSetup& setup,
                                      const BoundaryPath& path, const SpaceTimeField& a) {
    CostReport r;
    r.degenerate = outcome.degenerate;
    r.cost_ratio = outcome.degenerate ? 0.0 : outcome.cost_ratio;
    r.R_star = setup.R_star;
    r.E = setup.E;
    r.b = setup.b;
    r.max_abs_dR = path.max_abs_velocity();
    r.max_abs_a = a.max_abs();
    r.T = path.horizon();
    return r;
}

} // namespace radctl
