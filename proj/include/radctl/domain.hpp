#pragma once

// Geometry, reference grid, space-time storage and the z~ = r z change of
// variables for the radially symmetric problem.
//
// Every discretization lives on the fixed reference interval rho in [0, 1];
// the physical radius is r = rho * R(t).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "radctl/errors.hpp"
#include "radctl/nonlinearity.hpp"

namespace radctl {

/// Geometry and data of one experiment. Lengths share one unit, T is a time.
struct PhysicalSetup {
    double R0 = 1.0;
    double R_star = 0.5;
    double E = 1.5;
    double T = 0.5;
    double b = 0.3;
    double b0 = 0.25;
    Nonlinearity nonlinearity;
    /// r -> z~0(r) on [0, R0]; must vanish at both ends.
    std::function<double(double)> z0 = [](double) { return 0.0; };

    void validate() const {
        if (!(T > 0.0)) {
            throw ValidationError("physical.T", "horizon must be positive");
        }
        const auto ordering = [](const char* field) {
            return ValidationError(field, "constants must satisfy 0 < b0 < b < R_star < R0 < E");
        };
        if (!(0.0 < b0)) throw ordering("physical.b0");
        if (!(b0 < b)) throw ordering("physical.b0");
        if (!(b < R_star)) throw ordering("physical.b");
        if (!(R_star < R0)) throw ordering("physical.R_star");
        if (!(R0 < E)) throw ordering("physical.E");
        if (!z0) {
            throw ValidationError("physical.initial", "initial data sampler is empty");
        }
        const double left = z0(0.0);
        const double right = z0(R0);
        if (std::abs(left) > 1e-12 || std::abs(right) > 1e-12) {
            throw ValidationError("physical.initial", "z~0 must vanish at r = 0 and r = R0");
        }
    }
};

/// Uniform nodes rho_i = i / N on [0, 1].
struct ReferenceGrid {
    int N = 0;

    explicit ReferenceGrid(int n) : N(n) {
        if (n < 2) {
            throw DomainError("reference grid needs N >= 2");
        }
    }

    double step() const noexcept { return 1.0 / N; }
    double rho(int i) const noexcept { return static_cast<double>(i) / N; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(N) + 1; }

    std::vector<double> nodes() const {
        std::vector<double> out(size());
        for (int i = 0; i <= N; ++i) out[i] = rho(i);
        return out;
    }
};

/// Radius samples R_j and velocity samples R'_j on t_j = j T / M.
class BoundaryPath {
public:
    BoundaryPath() = default;

    BoundaryPath(double horizon, std::vector<double> radius, std::vector<double> velocity)
        : T_(horizon), R_(std::move(radius)), dR_(std::move(velocity)) {
        if (R_.size() != dR_.size() || R_.size() < 2) {
            throw DimensionError("boundary path needs matching radius/velocity samples (>= 2)");
        }
        if (!(T_ > 0.0)) {
            throw DomainError("boundary path horizon must be positive");
        }
    }

    static BoundaryPath constant(double radius, double horizon, int steps) {
        return BoundaryPath(horizon, std::vector<double>(steps + 1, radius),
                            std::vector<double>(steps + 1, 0.0));
    }

    template <class RadiusFn, class VelocityFn>
    static BoundaryPath sample(RadiusFn&& radius, VelocityFn&& velocity, double horizon, int steps) {
        std::vector<double> R(steps + 1), dR(steps + 1);
        for (int j = 0; j <= steps; ++j) {
            const double t = horizon * j / steps;
            R[j] = radius(t);
            dR[j] = velocity(t);
        }
        return BoundaryPath(horizon, std::move(R), std::move(dR));
    }

    int steps() const noexcept { return static_cast<int>(R_.size()) - 1; }
    double horizon() const noexcept { return T_; }
    double dt() const noexcept { return T_ / steps(); }
    double time(int j) const noexcept { return T_ * j / steps(); }

    double radius(int j) const { return R_.at(j); }
    double velocity(int j) const { return dR_.at(j); }
    const std::vector<double>& radii() const noexcept { return R_; }
    const std::vector<double>& velocities() const noexcept { return dR_; }

    /// Cubic Hermite interpolation of R at an arbitrary t in [0, T].
    double radius_at(double t) const {
        auto [j, s] = locate(t);
        if (s == 0.0) return R_[j];
        const double h = dt();
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return h00 * R_[j] + h10 * h * dR_[j] + h01 * R_[j + 1] + h11 * h * dR_[j + 1];
    }

    double min_radius() const { return *std::min_element(R_.begin(), R_.end()); }
    double max_radius() const { return *std::max_element(R_.begin(), R_.end()); }

    double max_abs_velocity() const {
        double m = 0.0;
        for (double v : dR_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Indices j with R_j outside [lower, upper].
    std::vector<int> breaches(double lower, double upper) const {
        std::vector<int> out;
        for (int j = 0; j <= steps(); ++j) {
            if (R_[j] < lower || R_[j] > upper || !std::isfinite(R_[j])) out.push_back(j);
        }
        return out;
    }

    void validate(double lower, double upper) const {
        auto bad = breaches(lower, upper);
        if (!bad.empty()) {
            throw DomainError("boundary path leaves [R_star, E] at t = " +
                              std::to_string(time(bad.front())) +
                              " (R = " + std::to_string(R_[bad.front()]) + ")");
        }
    }

private:
    std::pair<int, double> locate(double t) const {
        if (t < -1e-14 * T_ || t > T_ * (1 + 1e-14)) {
            throw DomainError("time outside [0, T]");
        }
        const double x = std::clamp(t / dt(), 0.0, static_cast<double>(steps()));
        int j = static_cast<int>(std::floor(x));
        if (j >= steps()) return {steps(), 0.0};
        return {j, x - j};
    }

    double T_ = 1.0;
    std::vector<double> R_;
    std::vector<double> dR_;
};

enum class FieldRole { State, Adjoint, Potential, Control, Source };

inline std::string to_string(FieldRole role) {
    switch (role) {
    case FieldRole::State: return "state";
    case FieldRole::Adjoint: return "adjoint";
    case FieldRole::Potential: return "potential";
    case FieldRole::Control: return "control";
    case FieldRole::Source: return "source";
    }
    return "unknown";
}

/// (N+1) x (M+1) samples; entry (i, j) is the value at (rho_i, t_j).
/// Storage is one contiguous column per time level.
class SpaceTimeField {
public:
    SpaceTimeField() = default;

    SpaceTimeField(FieldRole role, int n, int m, double fill = 0.0)
        : role_(role), N_(n), M_(m),
          values_(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(m + 1), fill) {
        if (n < 2 || m < 1) {
            throw DimensionError("space-time field needs N >= 2 and M >= 1");
        }
    }

    FieldRole role() const noexcept { return role_; }
    void set_role(FieldRole role) noexcept { role_ = role; }
    int N() const noexcept { return N_; }
    int M() const noexcept { return M_; }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(N_) + 1; }

    double& operator()(int i, int j) noexcept { return values_[j * rows() + i]; }
    double operator()(int i, int j) const noexcept { return values_[j * rows() + i]; }

    std::span<double> column(int j) { return {values_.data() + j * rows(), rows()}; }
    std::span<const double> column(int j) const { return {values_.data() + j * rows(), rows()}; }

    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Largest |value| on the rho = 0 and rho = 1 rows.
    double dirichlet_defect() const {
        double m = 0.0;
        for (int j = 0; j <= M_; ++j) {
            m = std::max({m, std::abs((*this)(0, j)), std::abs((*this)(N_, j))});
        }
        return m;
    }

    void require_shape(int n, int m, const char* what) const {
        if (N_ != n || M_ != m) {
            throw DimensionError(std::string(what) + ": field is " + std::to_string(N_) + "x" +
                                 std::to_string(M_) + ", expected " + std::to_string(n) + "x" +
                                 std::to_string(m));
        }
    }

private:
    FieldRole role_ = FieldRole::State;
    int N_ = 0;
    int M_ = 0;
    std::vector<double> values_;
};

/// Composite trapezoid rule for samples with uniform spacing h.
inline double trapezoid(std::span<const double> values, double h) {
    if (values.size() < 2) return 0.0;
    double sum = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
    return sum * h;
}

/// Trapezoid L2([0, R]) inner product of two nodal columns on the reference grid.
inline double l2_inner(std::span<const double> u, std::span<const double> v, double radius) {
    const std::size_t n = u.size() - 1;
    double sum = 0.5 * (u[0] * v[0] + u[n] * v[n]);
    for (std::size_t i = 1; i < n; ++i) sum += u[i] * v[i];
    return sum * radius / static_cast<double>(n);
}

inline double l2_norm(std::span<const double> u, double radius) {
    return std::sqrt(l2_inner(u, u, radius));
}

/// Trapezoid weights c_j in time (dt/2 at the ends, dt inside).
inline double time_weight(int j, int M, double dt) noexcept {
    return (j == 0 || j == M) ? 0.5 * dt : dt;
}

/// Nodal derivative d/drho on the reference grid: centered inside,
/// second-order one-sided at the ends.
inline std::vector<double> nodal_derivative(std::span<const double> u) {
    const std::size_t n = u.size() - 1;
    const double h = 1.0 / static_cast<double>(n);
    std::vector<double> d(u.size());
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    d[n] = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
    for (std::size_t i = 1; i < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    return d;
}

/// (int_0^R |u_r|^2 dr)^{1/2}, the H^1_0 seminorm used for initial data.
inline double h1_seminorm(std::span<const double> u, double radius) {
    auto d = nodal_derivative(u);
    for (double& v : d) v /= radius;
    return l2_norm(d, radius);
}

/// Samples r -> f(r) at r_i = rho_i * radius.
template <class Fn>
std::vector<double> sample_on_grid(Fn&& f, const ReferenceGrid& grid, double radius) {
    std::vector<double> out(grid.size());
    for (int i = 0; i <= grid.N; ++i) out[i] = f(grid.rho(i) * radius);
    return out;
}

/// z~(r) = r z(r) on the reference grid scaled to radius R.
inline std::vector<double> lift_to_tilde(std::span<const double> z, const ReferenceGrid& grid,
                                         double radius) {
    if (z.size() != grid.size()) {
        throw DimensionError("lift_to_tilde: " + std::to_string(z.size()) + " samples for " +
                             std::to_string(grid.size()) + " nodes");
    }
    std::vector<double> out(z.size());
    for (int i = 0; i <= grid.N; ++i) out[i] = grid.rho(i) * radius * z[i];
    return out;
}

/// z(r) = z~(r) / r for r > 0; at r = 0 the one-sided second-order
/// derivative of z~ stands in for the limit.
inline std::vector<double> project_from_tilde(std::span<const double> zt, const ReferenceGrid& grid,
                                              double radius, double tolerance = 1e-12) {
    if (zt.size() != grid.size()) {
        throw DimensionError("project_from_tilde: " + std::to_string(zt.size()) +
                             " samples for " + std::to_string(grid.size()) + " nodes");
    }
    double scale = 1.0;
    for (double v : zt) scale = std::max(scale, std::abs(v));
    if (std::abs(zt[0]) > tolerance * scale) {
        throw InconsistencyError("project_from_tilde: z~(0) = " + std::to_string(zt[0]) +
                                 " but must vanish");
    }
    const double dr = grid.step() * radius;
    std::vector<double> out(zt.size());
    out[0] = (-3.0 * zt[0] + 4.0 * zt[1] - zt[2]) / (2.0 * dr);
    for (int i = 1; i <= grid.N; ++i) out[i] = zt[i] / (grid.rho(i) * radius);
    return out;
}

struct NormPair {
    double weighted;  ///< int_0^R |z|^2 r^2 dr
    double flat;      ///< int_0^R |z~|^2 dr
};

inline NormPair norm_weighted_equiv(std::span<const double> z, std::span<const double> zt,
                                    const ReferenceGrid& grid, double radius) {
    if (z.size() != grid.size() || zt.size() != grid.size()) {
        throw DimensionError("norm_weighted_equiv: sample count does not match grid");
    }
    std::vector<double> w(grid.size()), f(grid.size());
    for (int i = 0; i <= grid.N; ++i) {
        const double r = grid.rho(i) * radius;
        w[i] = z[i] * z[i] * r * r;
        f[i] = zt[i] * zt[i];
    }
    const double dr = grid.step() * radius;
    return {trapezoid(w, dr), trapezoid(f, dr)};
}

/// y(x) = z(|x|) by linear interpolation on the radial grid.
inline std::vector<double> reconstruct_3d(std::span<const double> z, const ReferenceGrid& grid,
                                          double radius,
                                          std::span<const std::array<double, 3>> points) {
    if (z.size() != grid.size()) {
        throw DimensionError("reconstruct_3d: sample count does not match grid");
    }
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& x : points) {
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (r > radius * (1.0 + 1e-12)) {
            throw DomainError("reconstruct_3d: |x| = " + std::to_string(r) + " exceeds R = " +
                              std::to_string(radius));
        }
        const double pos = std::min(r / radius, 1.0) * grid.N;
        const int i = std::min(static_cast<int>(pos), grid.N - 1);
        const double s = pos - i;
        out.push_back((1.0 - s) * z[i] + s * z[i + 1]);
    }
    return out;
}

} // namespace radctl
