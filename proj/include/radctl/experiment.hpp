#pragma once

// Scenario runners and the concurrent sweep driver. Each run writes
// summary.json (deterministic scalars only), manifest.json (resolved config,
// version, wall time) and its scenario files into one directory.

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "radctl/config.hpp"
#include "radctl/io.hpp"

namespace radctl {

inline constexpr const char* kVersion = "0.1.0";

struct RunOutcome {
    json summary;
    bool ok = true;
    std::string error;
    fs::path out_dir;
};

/// --out-dir, then $RADCTL_OUT_DIR, then the config's out_dir.
inline fs::path resolve_out_dir(const std::optional<std::string>& cli, const ExperimentConfig& c) {
    if (cli && !cli->empty()) return *cli;
    if (const char* env = std::getenv("RADCTL_OUT_DIR"); env && *env) return env;
    return c.out_dir;
}

namespace scenario_detail {

struct Context {
    const ExperimentConfig& c;
    fs::path dir;
    json summary = json::object();
    bool ok = true;
    std::string error;
};

inline SchemeConfig scheme_at(const ExperimentConfig& c, int N, int M) {
    SchemeConfig s = c.scheme;
    s.N = N;
    s.M = M;
    return s;
}

/// Closed-form solution at T when the data is a single sine mode on a fixed
/// radius with a constant potential.
inline std::optional<std::vector<double>> exact_forward(const ExperimentConfig& c, int N) {
    if (!c.initial.is_sine_mode() || c.potential.kind == "random") return std::nullopt;
    if (c.path.kind != "constant" && c.path.amplitude != 0.0) return std::nullopt;
    const double R = c.physical.R0;
    const int m = c.initial.kind == "sine" ? c.initial.mode : 1;
    const double a = c.potential.kind == "constant" ? c.potential.value : 0.0;
    const double k = m * std::numbers::pi / R;
    const double decay = std::exp(-(k * k + a) * c.physical.T);
    const double A = c.initial.sine_amplitude(R);
    std::vector<double> u(N + 1);
    for (int i = 0; i <= N; ++i) u[i] = A * decay * std::sin(m * std::numbers::pi * i / N);
    u.front() = 0.0;
    u.back() = 0.0;
    return u;
}

inline double l2_diff(std::span<const double> u, std::span<const double> v, double R) {
    std::vector<double> d(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] - v[i];
    return l2_norm(d, R);
}

inline void run_forward(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto path = make_path(c, s.M);
    const auto a = make_potential(c, s.N, s.M);
    const auto z0 = c.initial.sample(s.grid(), c.physical.R0);
    const auto y = solve_forward_linear(z0, path, a, SpaceTimeField(FieldRole::Source, s.N, s.M), s);
    const double RT = path.radius(s.M);
    ctx.summary["l2_norm_0"] = l2_norm(z0, c.physical.R0);
    ctx.summary["l2_norm_T"] = l2_norm(y.column(s.M), RT);
    ctx.summary["h1_T"] = h1_seminorm(y.column(s.M), RT);
    ctx.summary["sup_state"] = y.max_abs();
    if (auto ex = exact_forward(c, s.N)) ctx.summary["l2_error_T"] = l2_diff(y.column(s.M), *ex, RT);
    write_field_csv(ctx.dir / "state.csv", y);
    write_path_csv(ctx.dir / "path.csv", path);
}

inline void run_semilinear(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto path = make_path(c, s.M);
    const auto z0 = c.initial.sample(s.grid(), c.physical.R0);
    const auto y = solve_semilinear(z0, path, SpaceTimeField(FieldRole::Control, s.N, s.M),
                                    c.physical.nonlinearity, s, ControlRegion::from(c.physical));
    const double RT = path.radius(s.M);
    ctx.summary["l2_norm_0"] = l2_norm(z0, c.physical.R0);
    ctx.summary["l2_norm_T"] = l2_norm(y.column(s.M), RT);
    ctx.summary["sup_state"] = y.max_abs();
    write_field_csv(ctx.dir / "state.csv", y);
    write_path_csv(ctx.dir / "path.csv", path);
}

inline void run_adjoint(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto path = make_path(c, s.M);
    const auto a = make_potential(c, s.N, s.M);
    const double RT = path.radius(s.M);
    const auto phiT = c.initial.sample(s.grid(), RT);
    const auto phi = solve_adjoint(phiT, path, a, s);

    // Duality defect against the forward solve from the same profile at t = 0.
    const auto z0 = c.initial.sample(s.grid(), c.physical.R0);
    const auto y = solve_forward_linear(z0, path, a, SpaceTimeField(FieldRole::Source, s.N, s.M), s);
    const double lhs = l2_inner(y.column(s.M), phiT, RT);
    const double rhs = l2_inner(z0, phi.column(0), path.radius(0));
    const double scale = l2_norm(z0, path.radius(0)) * l2_norm(phiT, RT);

    ctx.summary["l2_norm_T"] = l2_norm(phiT, RT);
    ctx.summary["l2_norm_0"] = l2_norm(phi.column(0), path.radius(0));
    ctx.summary["duality_defect"] = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
    write_field_csv(ctx.dir / "adjoint.csv", phi);
    write_path_csv(ctx.dir / "path.csv", path);
}

inline json hum_json(const HUMOutcome& h) {
    return json{{"epsilon", h.epsilon},
                {"variant", to_string(h.variant)},
                {"cg_iters", h.cg_iters},
                {"J_value", h.J_value},
                {"final_norm", h.final_norm},
                {"cost", h.cost},
                {"cost_ratio", h.cost_ratio},
                {"initial_h1", h.initial_h1},
                {"degenerate", h.degenerate},
                {"converged", h.converged},
                {"optimality_residual", h.optimality_residual}};
}

inline void run_hum(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto path = make_path(c, s.M);
    const auto a = make_potential(c, s.N, s.M);
    const auto z0 = c.initial.sample(s.grid(), c.physical.R0);
    const auto h = minimize_J(z0, path, a, ControlRegion::from(c.physical), s, c.hum);
    const auto rep = control_cost_report(h, c.physical, path, a);

    ctx.summary.update(hum_json(h));
    ctx.summary["l2_norm_0"] = l2_norm(z0, c.physical.R0);
    ctx.summary["max_abs_dR"] = rep.max_abs_dR;
    ctx.summary["max_abs_a"] = rep.max_abs_a;
    json hs = hum_json(h);
    hs["residual_history"] = h.residual_history;
    write_json(ctx.dir / "hum-summary.json", hs);
    write_field_csv(ctx.dir / "control.csv", h.control);
    write_field_csv(ctx.dir / "state.csv", h.state);
    write_path_csv(ctx.dir / "path.csv", path);
}

inline void run_stefan(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto z0 = c.initial.sample(s.grid(), c.physical.R0);
    CoupledOptions opts;
    opts.corrector = c.corrector;
    opts.sign = c.fixedpoint.sign();
    const auto res = coupled_solve(z0, c.physical, SpaceTimeField(FieldRole::Control, s.N, s.M), s, opts);

    bool R_monotone = true, norm_monotone = true;
    double prev_norm = l2_norm(res.state.column(0), res.path.radius(0));
    for (int j = 1; j <= s.M; ++j) {
        R_monotone = R_monotone && res.path.radius(j) >= res.path.radius(j - 1);
        const double n = l2_norm(res.state.column(j), res.path.radius(j));
        norm_monotone = norm_monotone && n <= prev_norm;
        prev_norm = n;
    }
    ctx.summary["R_T"] = res.path.radius(s.M);
    ctx.summary["R_min"] = res.path.min_radius();
    ctx.summary["R_max"] = res.path.max_radius();
    ctx.summary["max_abs_dR"] = res.path.max_abs_velocity();
    ctx.summary["breaches"] = static_cast<int>(res.breaches.size());
    ctx.summary["R_nondecreasing"] = R_monotone;
    ctx.summary["norm_nonincreasing"] = norm_monotone;
    ctx.summary["l2_norm_0"] = l2_norm(z0, c.physical.R0);
    ctx.summary["l2_norm_T"] = l2_norm(res.state.column(s.M), res.path.radius(s.M));
    write_field_csv(ctx.dir / "state.csv", res.state);
    write_path_csv(ctx.dir / "path.csv", res.path);
}

inline std::string history_csv(const std::vector<FixedPointRecord>& hist) {
    std::ostringstream os;
    os << "iteration,epsilon,dz,dR,ddR,final_norm,cost_ratio,R_min,R_max,sup_state,within_K,within_K1,breach\n";
    for (const auto& r : hist) {
        os << r.iteration << "," << format_double(r.epsilon) << "," << format_double(r.dz) << ","
           << format_double(r.dR) << "," << format_double(r.ddR) << "," << format_double(r.final_norm) << ","
           << format_double(r.cost_ratio) << "," << format_double(r.R_min) << "," << format_double(r.R_max)
           << "," << format_double(r.sup_state) << "," << r.within_K << "," << r.within_K1 << "," << r.breach
           << "\n";
    }
    return os.str();
}

inline void run_fixedpoint(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto z0 = c.initial.sample(s.grid(), c.physical.R0);
    const auto res = fixed_point_iterate(z0, c.physical, s, c.fixedpoint, c.hum);

    ctx.summary["iterations"] = res.iterations;
    ctx.summary["converged"] = res.converged;
    ctx.summary["breach"] = res.breach;
    ctx.summary["final_norm"] = res.hum.final_norm;
    ctx.summary["final_tolerance"] = res.final_tolerance;
    ctx.summary["cost_ratio"] = res.hum.cost_ratio;
    ctx.summary["R_min"] = res.path.min_radius();
    ctx.summary["R_max"] = res.path.max_radius();
    ctx.summary["R_T"] = res.path.radius(s.M);
    ctx.summary["last_change"] = res.history.empty() ? 0.0 : res.history.back().change();
    ctx.summary["holder_quarter"] =
        holder_seminorm(boundary_trace(res.state, res.path, s.flux_order), res.path.dt(), 0.25);
    json study = json::array();
    for (const auto& e : res.epsilon_study) {
        study.push_back({{"epsilon", e.epsilon},
                         {"iterations", e.iterations},
                         {"converged", e.converged},
                         {"final_norm", e.final_norm},
                         {"cost_ratio", e.cost_ratio},
                         {"holder", e.holder}});
    }
    ctx.summary["epsilon_study"] = study;

    atomic_write(ctx.dir / "fixedpoint-history.csv", history_csv(res.history));
    json hs = hum_json(res.hum);
    hs["residual_history"] = res.hum.residual_history;
    write_json(ctx.dir / "hum-summary.json", hs);
    write_field_csv(ctx.dir / "state.csv", res.state);
    write_field_csv(ctx.dir / "control.csv", res.control);
    write_path_csv(ctx.dir / "path.csv", res.path);
    if (!res.converged) {
        ctx.ok = false;
        ctx.error = "fixed-point iteration did not converge within " + std::to_string(c.fixedpoint.max_outer) +
                    " outer iterations";
    }
}

inline void run_carleman(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto path = make_path(c, s.M);
    const auto lemma = verify_weight_lemma(c.physical, path, s.grid());

    CarlemanBatteryConfig bc;
    bc.count = c.carleman.count;
    bc.modes = c.carleman.modes;
    bc.lambda = c.carleman.lambda;
    bc.k = c.carleman.k;
    bc.s_multipliers = c.carleman.s_multipliers;
    bc.seed = c.seed;
    bc.s0 = c.carleman.s;
    bc.options.margin = c.carleman.margin;
    bc.options.weighted_observation = c.carleman.weighted_observation;
    const auto rep = run_carleman_battery(c.physical, path, s, bc);

    json records = json::array();
    for (const auto& r : rep.records) {
        const auto& t = r.terms;
        records.push_back({{"test", r.test},
                           {"s", r.s},
                           {"lambda", r.lambda},
                           {"k", r.k},
                           {"I", {{"phi_t", t.phi_t}, {"phi_rr", t.phi_rr}, {"phi_r", t.phi_r}, {"phi", t.phi},
                                  {"boundary", t.boundary}, {"total", t.I()}}},
                           {"rhs", {{"observation", t.observation}, {"source", t.source}, {"total", t.rhs()}}},
                           {"ratio", t.ratio()}});
    }
    write_json(ctx.dir / "carleman-report.json",
               json{{"s0", rep.s0},
                    {"empirical_constant", rep.empirical_constant},
                    {"passed", rep.passed()},
                    {"monotonicity_violations", rep.monotonicity_violations},
                    {"bound_violations", rep.bound_violations},
                    {"records", records}});

    ctx.summary["s0"] = rep.s0;
    ctx.summary["empirical_constant"] = rep.empirical_constant;
    ctx.summary["tests"] = bc.count;
    ctx.summary["battery_passed"] = rep.passed();
    ctx.summary["monotonicity_violations"] = static_cast<int>(rep.monotonicity_violations.size());
    ctx.summary["bound_violations"] = static_cast<int>(rep.bound_violations.size());
    ctx.summary["weight_lemma_passed"] = lemma.passed();
    ctx.summary["weight_min_abs_derivative"] = lemma.min_abs_derivative;
    ctx.summary["weight_c1_mismatch"] = lemma.c1_mismatch_max;
    if (!rep.passed() || !lemma.passed()) {
        ctx.ok = false;
        ctx.error = "Carleman battery or weight lemma checks failed; see carleman-report.json";
    }
}

inline void run_observability(Context& ctx) {
    const auto& c = ctx.c;
    const auto& s = c.scheme;
    const auto path = make_path(c, s.M);
    const auto a = make_potential(c, s.N, s.M);
    ObservabilityConfig oc = c.observability;
    oc.seed = c.seed;
    const auto region = ControlRegion::from(c.physical);
    const auto est = estimate_observability(path, a, region, s, oc);

    json out{{"constant", est.constant},
             {"grid", {{"N", s.N}, {"M", s.M}, {"theta", s.theta}}},
             {"geometry",
              {{"R0", c.physical.R0}, {"b", c.physical.b}, {"T", c.physical.T}, {"path", c.path.kind},
               {"path_amplitude", c.path.amplitude}, {"R_min", path.min_radius()}, {"R_max", path.max_radius()}}},
             {"potential", {{"kind", c.potential.kind}, {"value", c.potential.value}, {"max_abs", a.max_abs()}}},
             {"delta", est.delta},
             {"iterations", est.iterations},
             {"cg_iterations", est.cg_iterations},
             {"residual", est.residual},
             {"history", est.history}};
    ctx.summary["constant"] = est.constant;
    ctx.summary["iterations"] = est.iterations;
    ctx.summary["residual"] = est.residual;
    ctx.summary["delta"] = est.delta;
    if (s.N <= 32 && s.M <= 64) {
        const auto dense = dense_oracle(path, a, region, s, oc.delta);
        out["dense_constant"] = dense.constant;
        ctx.summary["dense_constant"] = dense.constant;
        ctx.summary["dense_relative_gap"] = std::abs(est.constant - dense.constant) / dense.constant;
    }
    write_json(ctx.dir / "observability.json", out);
}

/// Forward solves on successively doubled grids. The error is measured
/// against the closed form when there is one, otherwise against the next
/// finer level restricted to the coarse nodes.
inline void run_convergence(Context& ctx) {
    const auto& c = ctx.c;
    const int L = c.convergence.levels;
    std::vector<std::vector<double>> finals;
    std::vector<double> radii;
    std::vector<int> Ns;
    for (int l = 0; l < L; ++l) {
        const int N = c.scheme.N << l;
        const int M = c.scheme.M << l;
        const auto s = scheme_at(c, N, M);
        const auto path = make_path(c, M);
        const auto a = make_potential(c, N, M);
        const auto z0 = c.initial.sample(s.grid(), c.physical.R0);
        const auto y = solve_forward_linear(z0, path, a, SpaceTimeField(FieldRole::Source, N, M), s);
        const auto col = y.column(M);
        finals.emplace_back(col.begin(), col.end());
        radii.push_back(path.radius(M));
        Ns.push_back(N);
    }
    const bool exact = exact_forward(c, Ns[0]).has_value() && c.potential.kind != "random";
    std::vector<double> errors;
    for (int l = 0; l < L; ++l) {
        if (exact) {
            errors.push_back(l2_diff(finals[l], *exact_forward(c, Ns[l]), radii[l]));
        } else if (l + 1 < L) {
            std::vector<double> fine(Ns[l] + 1);
            for (int i = 0; i <= Ns[l]; ++i) fine[i] = finals[l + 1][2 * i];
            errors.push_back(l2_diff(finals[l], fine, radii[l]));
        }
    }
    std::vector<double> ratios;
    for (std::size_t l = 1; l < errors.size(); ++l) ratios.push_back(errors[l - 1] / errors[l]);
    ctx.summary["reference"] = exact ? "closed_form" : "next_level";
    ctx.summary["levels"] = L;
    ctx.summary["level_N"] = Ns;
    ctx.summary["errors"] = errors;
    ctx.summary["ratios"] = ratios;
    ctx.summary["l2_error_T"] = errors.back();
    if (!ratios.empty()) {
        ctx.summary["ratio_last"] = ratios.back();
        ctx.summary["observed_order"] = std::log2(ratios.back());
    }
    std::ostringstream os;
    os << "level,N,M,l2_error_T\n";
    for (std::size_t l = 0; l < errors.size(); ++l) {
        os << l << "," << Ns[l] << "," << (c.scheme.M << l) << "," << format_double(errors[l]) << "\n";
    }
    atomic_write(ctx.dir / "convergence.csv", os.str());
}

} // namespace scenario_detail

/// Runs one experiment into `dir`. Library errors are caught and turned
/// into a failed outcome; the summary then carries the message.
inline RunOutcome run_experiment(const ExperimentConfig& c, const fs::path& dir) {
    using namespace scenario_detail;
    const auto start = std::chrono::steady_clock::now();
    Context ctx{c, dir, json::object(), true, ""};
    ctx.summary["scenario"] = to_string(c.scenario);
    ctx.summary["seed"] = c.seed;
    ctx.summary["N"] = c.scheme.N;
    ctx.summary["M"] = c.scheme.M;
    try {
        fs::create_directories(dir);
        switch (c.scenario) {
        case Scenario::Forward: run_forward(ctx); break;
        case Scenario::Semilinear: run_semilinear(ctx); break;
        case Scenario::Adjoint: run_adjoint(ctx); break;
        case Scenario::Hum: run_hum(ctx); break;
        case Scenario::Stefan: run_stefan(ctx); break;
        case Scenario::FixedPoint: run_fixedpoint(ctx); break;
        case Scenario::Carleman: run_carleman(ctx); break;
        case Scenario::Observability: run_observability(ctx); break;
        case Scenario::Convergence: run_convergence(ctx); break;
        }
    } catch (const ConvergenceError& e) {
        ctx.ok = false;
        ctx.error = e.what();
        ctx.summary["error_history"] = e.history();
    } catch (const std::exception& e) {
        ctx.ok = false;
        ctx.error = e.what();
    }
    ctx.summary["status"] = ctx.ok ? "ok" : "failed";
    if (!ctx.ok) ctx.summary["error"] = ctx.error;

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    RunOutcome out{ctx.summary, ctx.ok, ctx.error, dir};
    try {
        write_json(dir / "summary.json", ctx.summary);
        write_json(dir / "manifest.json",
                   json{{"version", kVersion}, {"config", c.raw}, {"wall_time_s", wall}, {"out_dir", dir.string()}});
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

/// POSIX glob expansion, sorted. A pattern without matches yields nothing.
inline std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<std::string> out;
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

struct SweepRow {
    std::string config;
    fs::path out_dir;
    RunOutcome outcome;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    fs::path csv;

    bool ok() const {
        return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.outcome.ok; });
    }
};

inline std::string sweep_cell(const json& v) {
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"') q += '"';
            q += ch == '\n' ? ' ' : ch;
        }
        return q + "\"";
    }
    return "";
}

/// Scalar summary entries become columns; arrays and objects are skipped.
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::set<std::string> keys;
    for (const auto& r : rows)
        for (auto it = r.outcome.summary.begin(); it != r.outcome.summary.end(); ++it)
            if (it.value().is_primitive() && it.key() != "status" && it.key() != "error") keys.insert(it.key());
    std::ostringstream os;
    os << "config,out_dir,status,error";
    for (const auto& k : keys) os << "," << k;
    os << "\n";
    for (const auto& r : rows) {
        os << sweep_cell(r.config) << "," << sweep_cell(r.out_dir.string()) << ","
           << (r.outcome.ok ? "ok" : "failed") << "," << sweep_cell(r.outcome.error);
        for (const auto& k : keys) {
            os << ",";
            if (r.outcome.summary.contains(k)) os << sweep_cell(r.outcome.summary[k]);
        }
        os << "\n";
    }
    return os.str();
}

/// Runs every config on a bounded worker pool. Each run gets
/// root/<config stem>; duplicate stems get a numeric suffix.
inline SweepReport run_sweep(const std::vector<std::string>& configs, const fs::path& root,
                             std::optional<std::uint64_t> seed = std::nullopt, unsigned workers = 0) {
    if (configs.empty()) throw ValidationError("configs", "sweep needs at least one config");
    SweepReport rep;
    rep.rows.resize(configs.size());
    std::map<std::string, int> seen;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        std::string stem = fs::path(configs[k]).stem().string();
        const int n = seen[stem]++;
        if (n > 0) stem += "-" + std::to_string(n);
        rep.rows[k].config = configs[k];
        rep.rows[k].out_dir = root / stem;
    }
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(configs.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < configs.size(); k = next++) {
            auto& row = rep.rows[k];
            try {
                auto cfg = load_config(row.config);
                if (seed) {
                    cfg.seed = *seed;
                    cfg.raw["seed"] = *seed;
                }
                row.outcome = run_experiment(cfg, row.out_dir);
            } catch (const std::exception& e) {
                row.outcome.ok = false;
                row.outcome.error = e.what();
                row.outcome.summary = json{{"status", "failed"}, {"error", e.what()}};
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    rep.csv = root / "sweep.csv";
    atomic_write(rep.csv, sweep_csv(rep.rows));
    return rep;
}

} // namespace radctl
