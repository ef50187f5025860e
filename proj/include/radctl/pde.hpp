#pragma once

// Theta-scheme solvers for z~_t - z~_rr + a z~ = S on the moving interval
// [0, R(t)], written on the reference interval through r = rho R(t):
//
//     w_t = L(t) w + S,   L w = w_rhorho / R^2 + (rho R' / R) w_rho - a w,
//
// with homogeneous Dirichlet data at rho = 0 and rho = 1.
//
// One step from t_j to t_{j+1} is
//
//     w^{j+1} = A_{j+1}^{-1} B_j (w^j + dt/2 S^j) + dt/2 S^{j+1},
//     A_{j+1} = I - theta dt L_{j+1},   B_j = I + (1 - theta) dt L_j.
//
// The backward (adjoint) step is the exact transpose of that map under the
// trapezoid inner products <u, v>_j = R_j drho sum u_i v_i, so the discrete
// duality identity and the symmetry of the control Gramian hold to rounding.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radctl/domain.hpp"
#include "radctl/errors.hpp"
#include "radctl/nonlinearity.hpp"
#include "radctl/tridiagonal.hpp"

namespace radctl {

struct SchemeConfig {
    int N = 50;
    int M = 100;
    double theta = 0.5;
    int flux_order = 2;

    void validate() const {
        if (N < 8) throw ValidationError("scheme.N", "need N >= 8");
        if (M < 8) throw ValidationError("scheme.M", "need M >= 8");
        if (!(theta >= 0.5 && theta <= 1.0)) {
            throw ValidationError("scheme.theta", "theta must lie in [1/2, 1]");
        }
        if (flux_order != 1 && flux_order != 2) {
            throw ValidationError("scheme.flux_order", "boundary flux stencil order is 1 or 2");
        }
    }

    ReferenceGrid grid() const { return ReferenceGrid(N); }
};

/// The physical control region omega = [0, b). The grid moves, so membership
/// of node i at step j is re-evaluated as rho_i R_j < b.
struct ControlRegion {
    double b = 0.0;

    bool contains(double rho, double radius) const noexcept { return rho * radius < b; }

    static ControlRegion from(const PhysicalSetup& setup) { return {setup.b}; }
};

/// Local geometry and potential at one time level.
struct LevelData {
    double radius = 1.0;
    double velocity = 0.0;
    std::span<const double> potential;  ///< empty means a == 0
};

/// Allocation-owning single-step engine shared by all solvers.
class ThetaStepper {
public:
    ThetaStepper(int n, double theta, double dt)
        : N_(n), theta_(theta), dt_(dt), solver_(n - 1),
          lo0_(n - 1), di0_(n - 1), up0_(n - 1), lo1_(n - 1), di1_(n - 1), up1_(n - 1),
          work_(n - 1), rhs_(n - 1), x_(n - 1) {}

    int N() const noexcept { return N_; }
    double dt() const noexcept { return dt_; }

    /// w_new = A1^{-1} B0 (w_old + dt/2 s_old) + dt/2 s_new. Empty sources mean zero.
    void forward(std::span<const double> w_old, std::span<double> w_new, const LevelData& from,
                 const LevelData& to, std::span<const double> s_old = {},
                 std::span<const double> s_new = {}) {
        const int n = N_ - 1;
        for (int k = 0; k < n; ++k) {
            work_[k] = w_old[k + 1] + (s_old.empty() ? 0.0 : 0.5 * dt_ * s_old[k + 1]);
        }
        assemble(from, lo0_, di0_, up0_);
        assemble(to, lo1_, di1_, up1_);
        const double ce = (1.0 - theta_) * dt_;
        for (int k = 0; k < n; ++k) {
            double lw = di0_[k] * work_[k];
            if (k > 0) lw += lo0_[k] * work_[k - 1];
            if (k + 1 < n) lw += up0_[k] * work_[k + 1];
            rhs_[k] = work_[k] + ce * lw;
        }
        implicit_bands();
        solver_.solve(lo1_, di1_, up1_, rhs_, x_);
        w_new[0] = 0.0;
        w_new[N_] = 0.0;
        for (int k = 0; k < n; ++k) {
            w_new[k + 1] = x_[k] + (s_new.empty() ? 0.0 : 0.5 * dt_ * s_new[k + 1]);
        }
    }

    /// Transpose of `forward` with respect to the weighted inner products:
    /// phi_old = (R1/R0) B0^T A1^{-T} (phi_new + dt/2 f_new) + dt/2 f_old.
    void backward(std::span<const double> phi_new, std::span<double> phi_old, const LevelData& from,
                  const LevelData& to, std::span<const double> f_old = {},
                  std::span<const double> f_new = {}) {
        const int n = N_ - 1;
        for (int k = 0; k < n; ++k) {
            rhs_[k] = phi_new[k + 1] + (f_new.empty() ? 0.0 : 0.5 * dt_ * f_new[k + 1]);
        }
        assemble(from, lo0_, di0_, up0_);
        assemble(to, lo1_, di1_, up1_);
        implicit_bands();
        solver_.solve_transposed(lo1_, di1_, up1_, rhs_, x_);
        const double ce = (1.0 - theta_) * dt_;
        const double ratio = to.radius / from.radius;
        phi_old[0] = 0.0;
        phi_old[N_] = 0.0;
        for (int k = 0; k < n; ++k) {
            // (L^T y)_k = up_{k-1} y_{k-1} + di_k y_k + lo_{k+1} y_{k+1}
            double lty = di0_[k] * x_[k];
            if (k > 0) lty += up0_[k - 1] * x_[k - 1];
            if (k + 1 < n) lty += lo0_[k + 1] * x_[k + 1];
            phi_old[k + 1] = ratio * (x_[k] + ce * lty) +
                             (f_old.empty() ? 0.0 : 0.5 * dt_ * f_old[k + 1]);
        }
    }

private:
    // Bands of L on interior nodes i = 1..N-1, stored at k = i - 1.
    void assemble(const LevelData& level, std::vector<double>& lo, std::vector<double>& di,
                  std::vector<double>& up) const {
        const double h = 1.0 / N_;
        const double diff = 1.0 / (level.radius * level.radius * h * h);
        const double adv = level.velocity / (level.radius * 2.0 * h);
        for (int k = 0; k < N_ - 1; ++k) {
            const double rho = (k + 1) * h;
            const double a = level.potential.empty() ? 0.0 : level.potential[k + 1];
            lo[k] = diff - rho * adv;
            di[k] = -2.0 * diff - a;
            up[k] = diff + rho * adv;
        }
    }

    // Turns the bands of L_{j+1} into those of A_{j+1} = I - theta dt L_{j+1}.
    void implicit_bands() {
        const double ci = theta_ * dt_;
        for (int k = 0; k < N_ - 1; ++k) {
            lo1_[k] = -ci * lo1_[k];
            di1_[k] = 1.0 - ci * di1_[k];
            up1_[k] = -ci * up1_[k];
        }
    }

    int N_;
    double theta_;
    double dt_;
    TridiagonalSolver solver_;
    std::vector<double> lo0_, di0_, up0_, lo1_, di1_, up1_;
    std::vector<double> work_, rhs_, x_;
};

inline SpaceTimeField zero_potential(int n, int m) {
    return SpaceTimeField(FieldRole::Potential, n, m, 0.0);
}

inline SpaceTimeField constant_potential(int n, int m, double value) {
    return SpaceTimeField(FieldRole::Potential, n, m, value);
}

namespace detail {

inline void check_path(const BoundaryPath& path, const SchemeConfig& cfg) {
    if (path.steps() != cfg.M) {
        throw DimensionError("boundary path has " + std::to_string(path.steps()) +
                             " steps, scheme expects M = " + std::to_string(cfg.M));
    }
    for (double r : path.radii()) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw DomainError("boundary path must stay strictly positive and finite");
        }
    }
}

inline void check_endpoint_data(std::span<const double> u, int n, const char* what) {
    if (u.size() != static_cast<std::size_t>(n) + 1) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(n + 1) +
                             " samples, got " + std::to_string(u.size()));
    }
    double scale = 1.0;
    for (double v : u) scale = std::max(scale, std::abs(v));
    if (std::abs(u.front()) > 1e-12 * scale || std::abs(u.back()) > 1e-12 * scale) {
        throw PreconditionError(std::string(what) + " must vanish at both ends");
    }
}

inline void check_finite(std::span<const double> u, int j, const SchemeConfig& cfg) {
    for (double v : u) {
        if (!std::isfinite(v)) {
            throw InstabilityError("non-finite values at time level " + std::to_string(j), cfg.N,
                                   2 * cfg.M);
        }
    }
}

inline LevelData level(const BoundaryPath& path, const SpaceTimeField& potential, int j) {
    return {path.radius(j), path.velocity(j), potential.column(j)};
}

/// Copies column j of a source field, zeroing nodes outside the control
/// region when the field carries the control role.
inline void effective_source(const SpaceTimeField& source, const BoundaryPath& path, int j,
                             const std::optional<ControlRegion>& region, std::span<double> out) {
    const auto col = source.column(j);
    const int n = source.N();
    for (int i = 0; i <= n; ++i) {
        const bool keep = source.role() != FieldRole::Control ||
                          region->contains(static_cast<double>(i) / n, path.radius(j));
        out[i] = keep ? col[i] : 0.0;
    }
}

inline void check_source(const SpaceTimeField& source, const SchemeConfig& cfg,
                         const std::optional<ControlRegion>& region) {
    source.require_shape(cfg.N, cfg.M, "source");
    if (source.role() == FieldRole::Control && !region) {
        throw PreconditionError("a control-role source needs a control region");
    }
}

} // namespace detail

/// Linear forward solve with potential `a` and right-hand side `source`.
/// A control-role source is restricted to rho R(t) < b.
inline SpaceTimeField solve_forward_linear(std::span<const double> z0, const BoundaryPath& path,
                                           const SpaceTimeField& a, const SpaceTimeField& source,
                                           const SchemeConfig& cfg,
                                           std::optional<ControlRegion> region = std::nullopt) {
    cfg.validate();
    detail::check_path(path, cfg);
    detail::check_endpoint_data(z0, cfg.N, "initial data");
    a.require_shape(cfg.N, cfg.M, "potential");
    detail::check_source(source, cfg, region);

    SpaceTimeField out(FieldRole::State, cfg.N, cfg.M);
    std::copy(z0.begin(), z0.end(), out.column(0).begin());
    out(0, 0) = 0.0;
    out(cfg.N, 0) = 0.0;

    ThetaStepper stepper(cfg.N, cfg.theta, path.dt());
    std::vector<double> s_old(cfg.N + 1), s_new(cfg.N + 1);
    detail::effective_source(source, path, 0, region, s_old);
    for (int j = 0; j < cfg.M; ++j) {
        detail::effective_source(source, path, j + 1, region, s_new);
        stepper.forward(out.column(j), out.column(j + 1), detail::level(path, a, j),
                        detail::level(path, a, j + 1), s_old, s_new);
        detail::check_finite(out.column(j + 1), j + 1, cfg);
        std::swap(s_old, s_new);
    }
    return out;
}

/// Source-free overload.
inline SpaceTimeField solve_forward_linear(std::span<const double> z0, const BoundaryPath& path,
                                           const SpaceTimeField& a, const SchemeConfig& cfg) {
    return solve_forward_linear(z0, path, a, SpaceTimeField(FieldRole::Source, cfg.N, cfg.M), cfg);
}

/// r f(z~ / r) on one column; zero at rho = 0 where it tends to 0.
inline void nonlinear_term(const Nonlinearity& f, std::span<const double> w, double radius,
                           std::span<double> out) {
    const int n = static_cast<int>(w.size()) - 1;
    out[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double r = radius * i / n;
        out[i] = r * f(w[i] / r);
    }
}

/// Semilinear forward solve. The term r f(z~/r) is lagged: both halves of
/// step j use its value at w^j.
inline SpaceTimeField solve_semilinear(std::span<const double> z0, const BoundaryPath& path,
                                       const SpaceTimeField& control, const Nonlinearity& f,
                                       const SchemeConfig& cfg,
                                       std::optional<ControlRegion> region = std::nullopt) {
    cfg.validate();
    detail::check_path(path, cfg);
    detail::check_endpoint_data(z0, cfg.N, "initial data");
    detail::check_source(control, cfg, region);

    SpaceTimeField out(FieldRole::State, cfg.N, cfg.M);
    std::copy(z0.begin(), z0.end(), out.column(0).begin());
    out(0, 0) = 0.0;
    out(cfg.N, 0) = 0.0;

    const std::vector<double> zeros(cfg.N + 1, 0.0);
    ThetaStepper stepper(cfg.N, cfg.theta, path.dt());
    std::vector<double> v_old(cfg.N + 1), v_new(cfg.N + 1), nl(cfg.N + 1);
    std::vector<double> s_old(cfg.N + 1), s_new(cfg.N + 1);
    detail::effective_source(control, path, 0, region, v_old);
    for (int j = 0; j < cfg.M; ++j) {
        detail::effective_source(control, path, j + 1, region, v_new);
        nonlinear_term(f, out.column(j), path.radius(j), nl);
        for (int i = 0; i <= cfg.N; ++i) {
            s_old[i] = v_old[i] - nl[i];
            s_new[i] = v_new[i] - nl[i];
        }
        stepper.forward(out.column(j), out.column(j + 1),
                        {path.radius(j), path.velocity(j), zeros},
                        {path.radius(j + 1), path.velocity(j + 1), zeros}, s_old, s_new);
        detail::check_finite(out.column(j + 1), j + 1, cfg);
        std::swap(v_old, v_new);
    }
    return out;
}

/// Backward solve of -phi_t - phi_rr + a phi = F from phi(T) = phiT.
inline SpaceTimeField solve_adjoint(std::span<const double> phiT, const BoundaryPath& path,
                                    const SpaceTimeField& a, const SpaceTimeField& F,
                                    const SchemeConfig& cfg) {
    cfg.validate();
    detail::check_path(path, cfg);
    detail::check_endpoint_data(phiT, cfg.N, "terminal data");
    a.require_shape(cfg.N, cfg.M, "potential");
    F.require_shape(cfg.N, cfg.M, "adjoint source");

    SpaceTimeField out(FieldRole::Adjoint, cfg.N, cfg.M);
    std::copy(phiT.begin(), phiT.end(), out.column(cfg.M).begin());
    out(0, cfg.M) = 0.0;
    out(cfg.N, cfg.M) = 0.0;

    ThetaStepper stepper(cfg.N, cfg.theta, path.dt());
    for (int j = cfg.M; j > 0; --j) {
        stepper.backward(out.column(j), out.column(j - 1), detail::level(path, a, j - 1),
                         detail::level(path, a, j), F.column(j - 1), F.column(j));
        detail::check_finite(out.column(j - 1), j - 1, cfg);
    }
    return out;
}

inline SpaceTimeField solve_adjoint(std::span<const double> phiT, const BoundaryPath& path,
                                    const SpaceTimeField& a, const SchemeConfig& cfg) {
    return solve_adjoint(phiT, path, a, SpaceTimeField(FieldRole::Source, cfg.N, cfg.M), cfg);
}

/// One-sided d/drho at rho = 1 of the requested order.
inline double endpoint_slope(std::span<const double> w, int order) {
    const std::size_t n = w.size() - 1;
    const double h = 1.0 / static_cast<double>(n);
    if (order == 1) return (w[n] - w[n - 1]) / h;
    return (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / (2.0 * h);
}

/// z~_r(R(t_j), t_j): one-sided slope at rho = 1 divided by R(t_j).
inline double boundary_flux(const SpaceTimeField& field, const BoundaryPath& path, int j,
                            int order = 2) {
    if (field.role() != FieldRole::State && field.role() != FieldRole::Adjoint) {
        throw PreconditionError("boundary_flux needs a state or adjoint field, got " +
                                to_string(field.role()));
    }
    if (order != 1 && order != 2) {
        throw PreconditionError("boundary flux stencil order must be 1 or 2");
    }
    const auto col = field.column(j);
    double scale = 1.0;
    for (double v : col) scale = std::max(scale, std::abs(v));
    if (std::abs(col.front()) > 1e-10 * scale || std::abs(col.back()) > 1e-10 * scale) {
        throw PreconditionError("boundary_flux: Dirichlet condition violated at time level " +
                                std::to_string(j));
    }
    return endpoint_slope(col, order) / path.radius(j);
}

} // namespace radctl
