#pragma once

// Carleman weight family for the even extension of the radial problem and
// numerical checks of the weighted estimate.
//
//   alpha0(r, t) = 1 + p((b - |r|)/b, b/(R(t) - b))     for |r| < b
//                = (R(t) - |r|) / (R(t) - b)             for b <= |r| <= R(t)
//   p(w, z)      = z w + (10 - 6z) w^3 + (8z - 15) w^4 + (6 - 3z) w^5
//   alpha1       = alpha0 + 1
//   sigma        = exp(2 lambda |alpha1|_inf) - exp(lambda alpha1)
//   alpha        = sigma / (t (T - t))^k,   xi = exp(lambda alpha1) / (t (T - t))^k

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "radctl/domain.hpp"
#include "radctl/errors.hpp"
#include "radctl/pde.hpp"

namespace radctl {

inline double eval_p(double w, double z) noexcept {
    const double w2 = w * w;
    const double w3 = w2 * w;
    return z * w + (10.0 - 6.0 * z) * w3 + (8.0 * z - 15.0) * w3 * w + (6.0 - 3.0 * z) * w3 * w2;
}

inline double eval_p_w(double w, double z) noexcept {
    const double w2 = w * w;
    return z + 3.0 * (10.0 - 6.0 * z) * w2 + 4.0 * (8.0 * z - 15.0) * w2 * w +
           5.0 * (6.0 - 3.0 * z) * w2 * w2;
}

/// alpha0 for a frozen radius R; even in r.
inline double alpha0(double r, double radius, double b) {
    const double x = std::abs(r);
    if (x > radius * (1.0 + 1e-12)) {
        throw DomainError("alpha0: |r| = " + std::to_string(x) + " exceeds R = " +
                          std::to_string(radius));
    }
    if (x < b) return 1.0 + eval_p((b - x) / b, b / (radius - b));
    return (radius - x) / (radius - b);
}

/// d alpha0 / dr for a frozen radius R; odd in r.
inline double alpha0_r(double r, double radius, double b) {
    const double x = std::abs(r);
    if (x > radius * (1.0 + 1e-12)) {
        throw DomainError("alpha0_r: |r| exceeds R");
    }
    const double sign = r < 0.0 ? -1.0 : 1.0;
    if (x < b) return sign * (-1.0 / b) * eval_p_w((b - x) / b, b / (radius - b));
    return sign * (-1.0 / (radius - b));
}

inline double eval_alpha0(double r, double t, const PhysicalSetup& setup, const BoundaryPath& path) {
    return alpha0(r, path.radius_at(t), setup.b);
}

/// Largest alpha1 = alpha0 + 1 over the path nodes and a uniform r sample.
inline double sup_alpha1(const PhysicalSetup& setup, const BoundaryPath& path, int r_samples = 4001) {
    double best = -std::numeric_limits<double>::infinity();
    for (double R : path.radii()) {
        for (int i = 0; i < r_samples; ++i) {
            const double r = R * i / (r_samples - 1);
            best = std::max(best, alpha0(r, R, setup.b) + 1.0);
        }
    }
    return best;
}

struct CarlemanParams {
    double lambda = 1.0;
    double s = 1.0;
    int k = 2;
    double sup_alpha1 = 3.0;

    static CarlemanParams make(double lambda, double s, int k, const PhysicalSetup& setup,
                               const BoundaryPath& path) {
        CarlemanParams p{lambda, s, k, radctl::sup_alpha1(setup, path)};
        p.validate();
        return p;
    }

    void validate() const {
        if (!(lambda > 0.0)) throw ValidationError("carleman.lambda", "must be positive");
        if (!(s > 0.0)) throw ValidationError("carleman.s", "must be positive");
        if (k < 2) throw ValidationError("carleman.k", "time exponent must be >= 2");
        if (!(sup_alpha1 >= 1.0)) throw ValidationError("carleman.sup_alpha1", "must be >= 1");
    }
};

struct WeightValues {
    double alpha1;
    double sigma;
    double alpha;
    double xi;
};

/// Weights at a point with a known radius; t must lie strictly inside (0, T).
inline WeightValues weights_at(double r, double t, double radius, double T, double b,
                               const CarlemanParams& params) {
    if (!(t > 0.0 && t < T)) {
        throw DomainError("Carleman weights degenerate at t = " + std::to_string(t) +
                          "; need 0 < t < T");
    }
    const double a1 = alpha0(r, radius, b) + 1.0;
    const double e = std::exp(params.lambda * a1);
    const double sigma = std::exp(2.0 * params.lambda * params.sup_alpha1) - e;
    const double theta = std::pow(t * (T - t), params.k);
    return {a1, sigma, sigma / theta, e / theta};
}

inline WeightValues eval_weights(double r, double t, const CarlemanParams& params,
                                 const PhysicalSetup& setup, const BoundaryPath& path) {
    return weights_at(r, t, path.radius_at(t), path.horizon(), setup.b, params);
}

struct CarlemanOptions {
    /// Time quadrature covers t in [margin T, (1 - margin) T]; <= 0 means 1/M.
    double margin = 0.0;
    /// Adds exp(-2 s alpha) to the observation integrand. Off by default.
    bool weighted_observation = false;
};

/// Terms of I(phi) and of the right-hand side of the weighted estimate.
struct CarlemanTerms {
    double phi_t = 0.0;     ///< int e^{-2s alpha} |phi_t|^2 / (s xi)
    double phi_rr = 0.0;    ///< int e^{-2s alpha} |phi_rr|^2 / (s xi)
    double phi_r = 0.0;     ///< int e^{-2s alpha} lambda^2 s xi |phi_r|^2
    double phi = 0.0;       ///< int e^{-2s alpha} lambda^4 s^3 xi^3 |phi|^2
    double boundary = 0.0;  ///< int e^{-2s alpha(R)} lambda s xi(R) |phi_r(R)|^2 dt
    double observation = 0.0;
    double source = 0.0;

    double interior() const noexcept { return phi_t + phi_rr + phi_r + phi; }
    double I() const noexcept { return interior() + boundary; }
    double rhs() const noexcept { return observation + source; }
    double ratio() const noexcept {
        const double d = rhs();
        if (d > 0.0) return I() / d;
        return I() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
};

namespace detail {

inline std::pair<int, int> carleman_time_range(int M, double margin) {
    const double d = margin > 0.0 ? margin : 1.0 / M;
    int first = std::max(1, static_cast<int>(std::ceil(d * M - 1e-9)));
    int last = std::min(M - 1, static_cast<int>(std::floor((1.0 - d) * M + 1e-9)));
    if (first > last) throw DomainError("Carleman time margin leaves no interior nodes");
    return {first, last};
}

inline std::vector<double> second_derivative(std::span<const double> u) {
    const std::size_t n = u.size() - 1;
    const double h2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    std::vector<double> d(u.size());
    d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
    d[n] = (2.0 * u[n] - 5.0 * u[n - 1] + 4.0 * u[n - 2] - u[n - 3]) / h2;
    for (std::size_t i = 1; i < n; ++i) d[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
    return d;
}

} // namespace detail

/// Evaluates the terms of I(phi) and the right-hand side for a discrete
/// adjoint solution. Derivatives come from centered differences of the
/// stored field; phi_t includes the moving-frame correction -rho R'/R phi_rho.
inline CarlemanTerms compute_I(const SpaceTimeField& phi, const SpaceTimeField& F,
                               const CarlemanParams& params, const PhysicalSetup& setup,
                               const BoundaryPath& path, const CarlemanOptions& opts = {}) {
    if (phi.role() != FieldRole::Adjoint) {
        throw PreconditionError("compute_I needs an adjoint field, got " + to_string(phi.role()));
    }
    params.validate();
    const int N = phi.N();
    const int M = phi.M();
    F.require_shape(N, M, "Carleman source");
    if (path.steps() != M) throw DimensionError("compute_I: path and field disagree on M");

    const auto [first, last] = detail::carleman_time_range(M, opts.margin);
    const double T = path.horizon();
    const double dt = path.dt();
    const double h = 1.0 / N;
    const double lam = params.lambda;
    const double s = params.s;

    CarlemanTerms out;
    std::vector<double> q_t(N + 1), q_rr(N + 1), q_r(N + 1), q_0(N + 1), q_obs(N + 1), q_src(N + 1);
    for (int j = first; j <= last; ++j) {
        const double R = path.radius(j);
        const double dR = path.velocity(j);
        const double t = path.time(j);
        const auto col = phi.column(j);
        const auto prev = phi.column(j - 1);
        const auto next = phi.column(j + 1);
        const auto d1 = nodal_derivative(col);
        const auto d2 = detail::second_derivative(col);
        for (int i = 0; i <= N; ++i) {
            const double rho = i * h;
            const auto w = weights_at(rho * R, t, R, T, setup.b, params);
            const double damp = std::exp(-2.0 * s * w.alpha);
            const double pt = (next[i] - prev[i]) / (2.0 * dt) - rho * dR / R * d1[i];
            const double pr = d1[i] / R;
            const double prr = d2[i] / (R * R);
            q_t[i] = damp * pt * pt / (s * w.xi);
            q_rr[i] = damp * prr * prr / (s * w.xi);
            q_r[i] = damp * lam * lam * s * w.xi * pr * pr;
            const double heavy = std::pow(lam, 4) * s * s * s * w.xi * w.xi * w.xi * col[i] * col[i];
            q_0[i] = damp * heavy;
            const bool observed = rho * R < setup.b;
            q_obs[i] = observed ? (opts.weighted_observation ? damp * heavy : heavy) : 0.0;
            q_src[i] = damp * F(i, j) * F(i, j);
        }
        const double cw = (j == first || j == last) ? 0.5 * dt : dt;
        const double dr = R * h;
        out.phi_t += cw * trapezoid(q_t, dr);
        out.phi_rr += cw * trapezoid(q_rr, dr);
        out.phi_r += cw * trapezoid(q_r, dr);
        out.phi += cw * trapezoid(q_0, dr);
        out.observation += cw * trapezoid(q_obs, dr);
        out.source += cw * trapezoid(q_src, dr);

        const auto wb = weights_at(R, t, R, T, setup.b, params);
        const double trace = d1[N] / R;
        out.boundary += cw * std::exp(-2.0 * s * wb.alpha) * lam * s * wb.xi * trace * trace;
    }
    if (first == last) {
        // A single node carries no trapezoid length; fall back to one dt.
        const double scale = dt / (0.5 * dt);
        out.phi_t *= scale;
        out.phi_rr *= scale;
        out.phi_r *= scale;
        out.phi *= scale;
        out.observation *= scale;
        out.source *= scale;
        out.boundary *= scale;
    }
    return out;
}

/// Smallest alpha on the Carleman quadrature nodes; s0 = 1 / (2 min alpha)
/// makes exp(-2 s0 alpha) >= e^{-1} somewhere on the grid.
inline double calibrate_s(const CarlemanParams& params, const PhysicalSetup& setup,
                          const BoundaryPath& path, int N, const CarlemanOptions& opts = {}) {
    const int M = path.steps();
    const auto [first, last] = detail::carleman_time_range(M, opts.margin);
    double min_alpha = std::numeric_limits<double>::infinity();
    for (int j = first; j <= last; ++j) {
        const double R = path.radius(j);
        for (int i = 0; i <= N; ++i) {
            const auto w = weights_at(R * i / N, path.time(j), R, path.horizon(), setup.b, params);
            min_alpha = std::min(min_alpha, w.alpha);
        }
    }
    return 1.0 / (2.0 * min_alpha);
}

struct WeightLemmaReport {
    double boundary_max = 0.0;        ///< max |alpha0(+-R(t), t)|
    double min_abs_derivative = 0.0;  ///< min |alpha0_r| on (b0 + margin, R - margin)
    double evenness_max = 0.0;        ///< max |alpha0(-r) - alpha0(r)|
    double linear_branch_max = 0.0;   ///< max |alpha0 - (1 - (r - b)/(R - b))| for r > b
    double origin_derivative_max = 0.0;
    double c1_mismatch_max = 0.0;     ///< |left - right| derivative at r = b
    std::vector<std::string> failures;

    bool passed() const noexcept { return failures.empty(); }
};

/// Samples the lemma's properties on every path node and a fine r scan.
inline WeightLemmaReport verify_weight_lemma(const PhysicalSetup& setup, const BoundaryPath& path,
                                             const ReferenceGrid& grid, double margin = 0.01,
                                             int scan = 2000) {
    WeightLemmaReport rep;
    rep.min_abs_derivative = std::numeric_limits<double>::infinity();
    const double b = setup.b;
    for (double R : path.radii()) {
        rep.boundary_max = std::max({rep.boundary_max, std::abs(alpha0(R, R, b)), std::abs(alpha0(-R, R, b))});

        std::vector<double> rs;
        for (int i = 0; i <= grid.N; ++i) rs.push_back(grid.rho(i) * R);
        for (int i = 0; i <= scan; ++i) rs.push_back(R * i / scan);
        for (double r : rs) {
            rep.evenness_max = std::max(rep.evenness_max, std::abs(alpha0(-r, R, b) - alpha0(r, R, b)));
            if (r > b) {
                const double lin = 1.0 - (r - b) / (R - b);
                rep.linear_branch_max = std::max(rep.linear_branch_max, std::abs(alpha0(r, R, b) - lin));
            }
        }
        const double lo = setup.b0 + margin;
        const double hi = R - margin;
        for (int i = 0; i <= scan; ++i) {
            const double r = lo + (hi - lo) * i / scan;
            rep.min_abs_derivative = std::min(rep.min_abs_derivative, std::abs(alpha0_r(r, R, b)));
        }
        for (int i = 0; i <= grid.N; ++i) {
            const double r = grid.rho(i) * R;
            if (r > lo && r < hi) {
                rep.min_abs_derivative = std::min(rep.min_abs_derivative, std::abs(alpha0_r(r, R, b)));
            }
        }
        rep.origin_derivative_max = std::max(rep.origin_derivative_max, std::abs(alpha0_r(0.0, R, b)));
        const double left = (-1.0 / b) * eval_p_w(0.0, b / (R - b));
        const double right = alpha0_r(b, R, b);
        rep.c1_mismatch_max = std::max(rep.c1_mismatch_max, std::abs(left - right));
    }
    if (rep.boundary_max != 0.0) rep.failures.push_back("alpha0 does not vanish at r = +-R(t)");
    if (!(rep.min_abs_derivative > 0.0)) rep.failures.push_back("alpha0_r vanishes on (b0, R)");
    if (rep.evenness_max != 0.0) rep.failures.push_back("alpha0 is not even");
    if (rep.linear_branch_max > 1e-12) rep.failures.push_back("linear branch identity fails for r > b");
    if (rep.origin_derivative_max > 1e-12) rep.failures.push_back("alpha0_r(0, t) != 0");
    if (rep.c1_mismatch_max > 1e-10) rep.failures.push_back("alpha0 is not C1 at r = b");
    return rep;
}

struct CarlemanRecord {
    int test = 0;
    double s = 0.0;
    double lambda = 0.0;
    int k = 2;
    CarlemanTerms terms;
};

struct CarlemanBatteryReport {
    double s0 = 0.0;
    double empirical_constant = 0.0;  ///< max ratio over the battery at s0
    std::vector<CarlemanRecord> records;
    std::vector<std::string> monotonicity_violations;
    std::vector<std::string> bound_violations;

    bool passed() const noexcept {
        return monotonicity_violations.empty() && bound_violations.empty();
    }
};

struct CarlemanBatteryConfig {
    int count = 20;
    int modes = 6;
    double lambda = 1.0;
    int k = 2;
    std::vector<double> s_multipliers{1.0, 2.0, 4.0};
    std::uint64_t seed = 1;
    double s0 = 0.0;  ///< <= 0: calibrate from the weights
    CarlemanOptions options;
};

/// Adjoint solutions from random terminal data (a = 0, F = 0) on `path`,
/// evaluated at s0 times each multiplier. The empirical constant is the
/// largest ratio at the base level; every other ratio must stay below it and
/// ratios may not grow as s doubles.
inline CarlemanBatteryReport run_carleman_battery(const PhysicalSetup& setup,
                                                  const BoundaryPath& path,
                                                  const SchemeConfig& cfg,
                                                  const CarlemanBatteryConfig& battery) {
    cfg.validate();
    CarlemanBatteryReport rep;
    auto base = CarlemanParams::make(battery.lambda, 1.0, battery.k, setup, path);
    rep.s0 = battery.s0 > 0.0 ? battery.s0 : calibrate_s(base, setup, path, cfg.N, battery.options);

    std::mt19937_64 rng(battery.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto a = zero_potential(cfg.N, cfg.M);
    const SpaceTimeField F(FieldRole::Source, cfg.N, cfg.M);

    std::vector<std::vector<double>> ratios(battery.count);
    for (int test = 0; test < battery.count; ++test) {
        std::vector<double> phiT(cfg.N + 1, 0.0);
        for (int m = 1; m <= battery.modes; ++m) {
            const double c = gauss(rng);
            for (int i = 1; i < cfg.N; ++i) phiT[i] += c * std::sin(m * std::numbers::pi * i / cfg.N);
        }
        const auto phi = solve_adjoint(phiT, path, a, F, cfg);
        for (double mult : battery.s_multipliers) {
            CarlemanParams p = base;
            p.s = rep.s0 * mult;
            CarlemanRecord rec{test, p.s, p.lambda, p.k, compute_I(phi, F, p, setup, path, battery.options)};
            ratios[test].push_back(rec.terms.ratio());
            rep.records.push_back(rec);
        }
        rep.empirical_constant = std::max(rep.empirical_constant, ratios[test].front());
    }
    for (int test = 0; test < battery.count; ++test) {
        for (std::size_t l = 0; l < ratios[test].size(); ++l) {
            if (!(ratios[test][l] <= rep.empirical_constant)) {
                rep.bound_violations.push_back("test " + std::to_string(test) + " level " +
                                               std::to_string(l));
            }
            if (l > 0 && ratios[test][l] > ratios[test][l - 1]) {
                rep.monotonicity_violations.push_back("test " + std::to_string(test) + " level " +
                                                      std::to_string(l));
            }
        }
    }
    return rep;
}

} // namespace radctl
