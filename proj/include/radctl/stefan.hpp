#pragma once

// Free-boundary coupling. The boundary moves with R' = sign * z~_r(R, t) / R,
// sign = -1 by default (melting for positive temperature). The fixed-point
// map linearizes with a = g(zbar / r), controls the linear problem on the
// frozen path, then rebuilds the path from the controlled boundary flux.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "radctl/control.hpp"
#include "radctl/domain.hpp"
#include "radctl/errors.hpp"
#include "radctl/nonlinearity.hpp"
#include "radctl/pde.hpp"

namespace radctl {

struct FixedPointConfig {
    double K = 1.0;
    double K1 = 10.0;
    int max_outer = 50;
    double fp_tol = 1e-6;
    std::vector<double> epsilon_schedule;
    bool flip_sign = false;
    /// Final-state tolerance relative to |z~0|_{L2}.
    double final_tol_rel = 0.01;

    double sign() const noexcept { return flip_sign ? 1.0 : -1.0; }

    void validate() const {
        if (!(K > 0.0)) throw ValidationError("fixedpoint.K", "must be positive");
        if (!(K1 > 0.0)) throw ValidationError("fixedpoint.K1", "must be positive");
        if (max_outer < 1) throw ValidationError("fixedpoint.max_outer", "must be >= 1");
        if (!(fp_tol > 0.0)) throw ValidationError("fixedpoint.fp_tol", "must be positive");
        if (!(final_tol_rel > 0.0)) throw ValidationError("fixedpoint.final_tol_rel", "must be positive");
        for (double e : epsilon_schedule) {
            if (!(e > 0.0)) throw ValidationError("fixedpoint.epsilon_schedule", "entries must be positive");
        }
    }
};

/// Boundary velocity from one column of z~ on a level of radius R.
inline double stefan_rate_column(std::span<const double> col, double radius, int order = 2,
                                 double sign = -1.0) {
    return sign * endpoint_slope(col, order) / (radius * radius);
}

/// R'(t_j) = sign * z~_r(R, t_j) / R.
inline double stefan_rate(const SpaceTimeField& field, const BoundaryPath& path, int j,
                          int order = 2, double sign = -1.0) {
    return sign * boundary_flux(field, path, j, order) / path.radius(j);
}

struct BoundaryUpdate {
    BoundaryPath path;
    std::vector<int> breaches;  ///< levels where R leaves [R_star, E]

    bool ok() const noexcept { return breaches.empty(); }
};

/// R(t) = R0 + int_0^t rate by the cumulative trapezoid rule; derivative
/// samples are the rate itself. Breaches are reported, never clamped.
inline BoundaryUpdate integrate_boundary(const SpaceTimeField& field, const BoundaryPath& Rbar,
                                         const PhysicalSetup& setup, int order = 2,
                                         double sign = -1.0) {
    const int M = field.M();
    if (Rbar.steps() != M) throw DimensionError("integrate_boundary: path and field disagree on M");
    std::vector<double> V(M + 1), R(M + 1);
    for (int j = 0; j <= M; ++j) V[j] = stefan_rate(field, Rbar, j, order, sign);
    R[0] = setup.R0;
    const double dt = Rbar.dt();
    for (int j = 0; j < M; ++j) R[j + 1] = R[j] + 0.5 * dt * (V[j] + V[j + 1]);
    BoundaryUpdate out{BoundaryPath(Rbar.horizon(), std::move(R), std::move(V)), {}};
    out.breaches = out.path.breaches(setup.R_star, setup.E);
    return out;
}

struct CoupledOptions {
    bool corrector = false;
    double sign = -1.0;
};

struct CoupledResult {
    SpaceTimeField state;
    BoundaryPath path;
    std::vector<int> breaches;
};

/// Semilinear PDE and Stefan law advanced together: explicit Euler on R,
/// optionally followed by one trapezoid corrector and a re-solve of the step.
inline CoupledResult coupled_solve(std::span<const double> z0, const PhysicalSetup& setup,
                                   const SpaceTimeField& control, const SchemeConfig& cfg,
                                   const CoupledOptions& opts = {}) {
    cfg.validate();
    detail::check_endpoint_data(z0, cfg.N, "initial data");
    const ControlRegion region = ControlRegion::from(setup);
    detail::check_source(control, cfg, region);
    const int N = cfg.N;
    const int M = cfg.M;
    const double dt = setup.T / M;
    const auto& f = setup.nonlinearity;

    SpaceTimeField w(FieldRole::State, N, M);
    std::copy(z0.begin(), z0.end(), w.column(0).begin());
    w(0, 0) = 0.0;
    w(N, 0) = 0.0;
    std::vector<double> R(M + 1), V(M + 1);
    R[0] = setup.R0;
    V[0] = stefan_rate_column(w.column(0), R[0], cfg.flux_order, opts.sign);

    const std::vector<double> zeros(N + 1, 0.0);
    ThetaStepper stepper(N, cfg.theta, dt);
    std::vector<double> nl(N + 1), s_old(N + 1), s_new(N + 1);
    auto masked = [&](int j, double radius, std::vector<double>& out) {
        const auto c = control.column(j);
        for (int i = 0; i <= N; ++i) {
            const bool keep = control.role() != FieldRole::Control ||
                              region.contains(static_cast<double>(i) / N, radius);
            out[i] = keep ? c[i] : 0.0;
        }
    };
    auto step = [&](int j, double R1, double V1) {
        nonlinear_term(f, w.column(j), R[j], nl);
        masked(j, R[j], s_old);
        masked(j + 1, R1, s_new);
        for (int i = 0; i <= N; ++i) {
            s_old[i] -= nl[i];
            s_new[i] -= nl[i];
        }
        stepper.forward(w.column(j), w.column(j + 1), {R[j], V[j], zeros}, {R1, V1, zeros}, s_old, s_new);
        detail::check_finite(w.column(j + 1), j + 1, cfg);
    };

    for (int j = 0; j < M; ++j) {
        double R1 = R[j] + dt * V[j];
        if (!(R1 > 0.0)) throw DomainError("coupled_solve: radius collapsed at step " + std::to_string(j + 1));
        step(j, R1, V[j]);
        double V1 = stefan_rate_column(w.column(j + 1), R1, cfg.flux_order, opts.sign);
        if (opts.corrector) {
            R1 = R[j] + 0.5 * dt * (V[j] + V1);
            if (!(R1 > 0.0)) throw DomainError("coupled_solve: radius collapsed at step " + std::to_string(j + 1));
            step(j, R1, V1);
            V1 = stefan_rate_column(w.column(j + 1), R1, cfg.flux_order, opts.sign);
        }
        R[j + 1] = R1;
        V[j + 1] = V1;
    }
    CoupledResult out{std::move(w), BoundaryPath(setup.T, std::move(R), std::move(V)), {}};
    out.breaches = out.path.breaches(setup.R_star, setup.E);
    return out;
}

/// Pointwise potential a(i, j) = g(zbar / r), r = rho_i Rbar_j. At rho = 0
/// the quotient is replaced by its limit z~_rho / R.
inline SpaceTimeField linearized_potential(const SpaceTimeField& zbar, const BoundaryPath& Rbar,
                                           const Nonlinearity& f) {
    const int N = zbar.N();
    SpaceTimeField a(FieldRole::Potential, N, zbar.M());
    for (int j = 0; j <= zbar.M(); ++j) {
        const auto col = zbar.column(j);
        const double R = Rbar.radius(j);
        const double slope0 = (-3.0 * col[0] + 4.0 * col[1] - col[2]) * N / 2.0;
        a(0, j) = g_of(f, slope0 / R);
        for (int i = 1; i <= N; ++i) a(i, j) = g_of(f, col[i] / (R * i / N));
    }
    return a;
}

struct LambdaResult {
    SpaceTimeField state;
    BoundaryPath path;
    HUMOutcome hum;
    double sup_state = 0.0;
    double max_abs_dR = 0.0;
    bool within_K = true;
    bool within_K1 = true;
    bool input_within_K = true;
    bool input_within_K1 = true;
    std::vector<int> breaches;
    double final_tolerance = 0.0;
    bool final_within_tolerance = true;
};

/// One application of the fixed-point map.
inline LambdaResult lambda_eps(const SpaceTimeField& zbar, const BoundaryPath& Rbar,
                               std::span<const double> z0, const PhysicalSetup& setup,
                               const HUMConfig& hum, const SchemeConfig& cfg,
                               const FixedPointConfig& fpc = {}) {
    zbar.require_shape(cfg.N, cfg.M, "linearization state");
    LambdaResult out;
    out.input_within_K = zbar.max_abs() <= fpc.K;
    out.input_within_K1 = Rbar.max_abs_velocity() <= fpc.K1;

    const auto a = linearized_potential(zbar, Rbar, setup.nonlinearity);
    out.hum = minimize_J(z0, Rbar, a, ControlRegion::from(setup), cfg, hum);
    out.state = out.hum.state;
    auto upd = integrate_boundary(out.state, Rbar, setup, cfg.flux_order, fpc.sign());
    out.path = std::move(upd.path);
    out.breaches = std::move(upd.breaches);

    out.sup_state = out.state.max_abs();
    out.max_abs_dR = out.path.max_abs_velocity();
    out.within_K = out.sup_state <= fpc.K;
    out.within_K1 = out.max_abs_dR <= fpc.K1;
    out.final_tolerance = fpc.final_tol_rel * l2_norm(z0, setup.R0);
    out.final_within_tolerance = out.hum.final_norm <= out.final_tolerance;
    return out;
}

struct FixedPointRecord {
    int iteration = 0;
    double epsilon = 0.0;
    double dz = 0.0;
    double dR = 0.0;
    double ddR = 0.0;
    double final_norm = 0.0;
    double cost_ratio = 0.0;
    double R_min = 0.0;
    double R_max = 0.0;
    double sup_state = 0.0;
    bool within_K = true;
    bool within_K1 = true;
    bool breach = false;

    double change() const noexcept { return std::max({dz, dR, ddR}); }
};

struct EpsilonRecord {
    double epsilon = 0.0;
    int iterations = 0;
    bool converged = false;
    double final_norm = 0.0;
    double cost_ratio = 0.0;
    double holder = 0.0;
};

struct FixedPointResult {
    SpaceTimeField state;
    SpaceTimeField control;
    BoundaryPath path;
    HUMOutcome hum;
    std::vector<FixedPointRecord> history;
    std::vector<EpsilonRecord> epsilon_study;
    int iterations = 0;
    bool converged = false;
    bool breach = false;        ///< some iterate left [R_star, E] or the K, K1 balls
    double final_tolerance = 0.0;
};

/// Discrete sup over sample pairs of |V(t) - V(t')| / |t - t'|^kappa.
inline double holder_seminorm(std::span<const double> V, double dt, double kappa) {
    if (!(kappa > 0.0 && kappa <= 1.0)) {
        throw ValidationError("holder.kappa", "exponent must lie in (0, 1]");
    }
    if (!(dt > 0.0)) throw ValidationError("holder.dt", "sample spacing must be positive");
    double best = 0.0;
    const std::size_t n = V.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            const double q = std::abs(V[k] - V[i]) / std::pow((k - i) * dt, kappa);
            best = std::max(best, q);
        }
    }
    return best;
}

/// Boundary trace V_R(t_j) = z~_r(R(t_j), t_j).
inline std::vector<double> boundary_trace(const SpaceTimeField& state, const BoundaryPath& path,
                                          int order = 2) {
    std::vector<double> v(state.M() + 1);
    for (int j = 0; j <= state.M(); ++j) v[j] = boundary_flux(state, path, j, order);
    return v;
}

namespace detail {

inline void picard(FixedPointResult& res, SpaceTimeField zbar, BoundaryPath Rbar,
                   std::span<const double> z0, const PhysicalSetup& setup,
                   const FixedPointConfig& fpc, const HUMConfig& hum, const SchemeConfig& cfg,
                   int& iterations, bool& converged) {
    iterations = 0;
    converged = false;
    for (int k = 1; k <= fpc.max_outer; ++k) {
        auto L = lambda_eps(zbar, Rbar, z0, setup, hum, cfg, fpc);
        FixedPointRecord rec;
        rec.iteration = k;
        rec.epsilon = hum.epsilon;
        for (std::size_t i = 0; i < zbar.values().size(); ++i) {
            rec.dz = std::max(rec.dz, std::abs(L.state.values()[i] - zbar.values()[i]));
        }
        for (int j = 0; j <= cfg.M; ++j) {
            rec.dR = std::max(rec.dR, std::abs(L.path.radius(j) - Rbar.radius(j)));
            rec.ddR = std::max(rec.ddR, std::abs(L.path.velocity(j) - Rbar.velocity(j)));
        }
        rec.final_norm = L.hum.final_norm;
        rec.cost_ratio = L.hum.cost_ratio;
        rec.R_min = L.path.min_radius();
        rec.R_max = L.path.max_radius();
        rec.sup_state = L.sup_state;
        rec.within_K = L.within_K;
        rec.within_K1 = L.within_K1;
        rec.breach = !L.breaches.empty() || !L.within_K || !L.within_K1;
        res.breach = res.breach || rec.breach;
        res.history.push_back(rec);
        iterations = k;

        zbar = L.state;
        Rbar = L.path;
        res.state = std::move(L.state);
        res.path = std::move(L.path);
        res.control = L.hum.control;
        res.hum = std::move(L.hum);
        if (rec.change() < fpc.fp_tol) {
            converged = true;
            return;
        }
    }
}

} // namespace detail

/// Picard iteration of lambda_eps from (time-constant extension of z0, R0),
/// followed by warm-started runs along the epsilon schedule.
inline FixedPointResult fixed_point_iterate(std::span<const double> z0, const PhysicalSetup& setup,
                                            const SchemeConfig& cfg, const FixedPointConfig& fpc,
                                            const HUMConfig& hum) {
    setup.validate();
    cfg.validate();
    fpc.validate();
    hum.validate();
    detail::check_endpoint_data(z0, cfg.N, "initial data");

    FixedPointResult res;
    res.final_tolerance = fpc.final_tol_rel * l2_norm(z0, setup.R0);
    SpaceTimeField zbar(FieldRole::State, cfg.N, cfg.M);
    for (int j = 0; j <= cfg.M; ++j) std::copy(z0.begin(), z0.end(), zbar.column(j).begin());
    const auto R0 = BoundaryPath::constant(setup.R0, setup.T, cfg.M);

    detail::picard(res, std::move(zbar), R0, z0, setup, fpc, hum, cfg, res.iterations, res.converged);

    FixedPointResult base = res;
    for (double eps : fpc.epsilon_schedule) {
        HUMConfig h = hum;
        h.epsilon = eps;
        FixedPointResult run;
        EpsilonRecord rec;
        rec.epsilon = eps;
        detail::picard(run, res.state, res.path, z0, setup, fpc, h, cfg, rec.iterations, rec.converged);
        rec.final_norm = run.hum.final_norm;
        rec.cost_ratio = run.hum.cost_ratio;
        rec.holder = holder_seminorm(boundary_trace(run.state, run.path, cfg.flux_order), run.path.dt(), 0.25);
        base.history.insert(base.history.end(), run.history.begin(), run.history.end());
        base.breach = base.breach || run.breach;
        base.epsilon_study.push_back(rec);
    }
    return base;
}

} // namespace radctl
