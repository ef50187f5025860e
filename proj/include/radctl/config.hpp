#pragma once

// Experiment configuration: one JSON document per run. Unknown keys are
// rejected so typos surface as validation errors with a field path.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "radctl/control.hpp"
#include "radctl/domain.hpp"
#include "radctl/errors.hpp"
#include "radctl/nonlinearity.hpp"
#include "radctl/observability.hpp"
#include "radctl/pde.hpp"
#include "radctl/stefan.hpp"
#include "radctl/weights.hpp"

namespace radctl {

using json = nlohmann::json;

enum class Scenario {
    Forward,
    Semilinear,
    Adjoint,
    Hum,
    Stefan,
    FixedPoint,
    Carleman,
    Observability,
    Convergence
};

inline const std::vector<std::pair<std::string, Scenario>>& scenario_names() {
    static const std::vector<std::pair<std::string, Scenario>> names{
        {"forward", Scenario::Forward},       {"semilinear", Scenario::Semilinear},
        {"adjoint", Scenario::Adjoint},       {"hum", Scenario::Hum},
        {"stefan", Scenario::Stefan},         {"fixedpoint", Scenario::FixedPoint},
        {"carleman", Scenario::Carleman},     {"observability", Scenario::Observability},
        {"convergence", Scenario::Convergence}};
    return names;
}

inline std::string to_string(Scenario s) {
    for (const auto& [name, v] : scenario_names())
        if (v == s) return name;
    return "unknown";
}

inline Scenario parse_scenario(const std::string& s) {
    for (const auto& [name, v] : scenario_names())
        if (name == s) return v;
    throw ValidationError("scenario", "unknown scenario '" + s + "'");
}

/// Initial (or terminal) profile z~0(r) on [0, R].
struct ProfileSpec {
    std::string kind = "sine";  // zero | sine | bump | h1_sine
    double amplitude = 1.0;
    int mode = 1;
    double h1 = 0.05;           // target H^1_0 seminorm for h1_sine

    std::function<double(double)> sampler(double R) const {
        const double pi = std::numbers::pi;
        if (kind == "zero") return [](double) { return 0.0; };
        if (kind == "sine") {
            const double A = amplitude;
            const int m = mode;
            return [=](double r) { return A * std::sin(m * pi * r / R); };
        }
        if (kind == "bump") {
            const double A = amplitude;
            return [=](double r) {
                const double s = std::sin(pi * r / R);
                return A * s * s * r / R;
            };
        }
        // h1_sine: A sin(pi r / R) with |A| pi / sqrt(2 R) = h1.
        const double A = h1 * std::sqrt(2.0 * R) / pi;
        return [=](double r) { return A * std::sin(pi * r / R); };
    }

    std::vector<double> sample(const ReferenceGrid& grid, double R) const {
        auto v = sample_on_grid(sampler(R), grid, R);
        v.front() = 0.0;
        v.back() = 0.0;
        return v;
    }

    bool is_sine_mode() const { return kind == "sine" || kind == "h1_sine"; }
    double sine_amplitude(double R) const {
        return kind == "sine" ? amplitude : h1 * std::sqrt(2.0 * R) / std::numbers::pi;
    }
};

/// Prescribed boundary path for the fixed-path scenarios.
struct PathSpec {
    std::string kind = "constant";  // constant | sinusoid | random
    double amplitude = 0.0;         // relative to R0
    double frequency = 1.0;         // periods over [0, T] for sinusoid
};

struct PotentialSpec {
    std::string kind = "zero";  // zero | constant | random
    double value = 0.0;
};

struct CarlemanSettings {
    double lambda = 1.0;
    double s = 0.0;  // <= 0: calibrate s0 from the weights
    int k = 2;
    int count = 20;
    int modes = 6;
    std::vector<double> s_multipliers{1.0, 2.0, 4.0};
    double margin = 0.0;
    bool weighted_observation = false;
};

struct ConvergenceSettings {
    int levels = 3;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::Forward;
    PhysicalSetup physical;
    ProfileSpec initial;
    PathSpec path;
    PotentialSpec potential;
    SchemeConfig scheme;
    HUMConfig hum;
    FixedPointConfig fixedpoint;
    CarlemanSettings carleman;
    ObservabilityConfig observability;
    ConvergenceSettings convergence;
    bool corrector = true;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    json raw;  ///< resolved document echoed into manifest.json

    void validate() const {
        physical.validate();
        physical.nonlinearity.validate();
        scheme.validate();
        hum.validate();
        fixedpoint.validate();
        observability.validate();
        const std::set<std::string> kinds{"zero", "sine", "bump", "h1_sine"};
        if (!kinds.count(initial.kind)) throw ValidationError("initial.kind", "unknown profile '" + initial.kind + "'");
        if (initial.mode < 1) throw ValidationError("initial.mode", "must be >= 1");
        if (path.kind != "constant" && path.kind != "sinusoid" && path.kind != "random") {
            throw ValidationError("path.kind", "unknown path '" + path.kind + "'");
        }
        if (!(path.amplitude >= 0.0 && path.amplitude < 1.0)) {
            throw ValidationError("path.amplitude", "must lie in [0, 1)");
        }
        if (potential.kind != "zero" && potential.kind != "constant" && potential.kind != "random") {
            throw ValidationError("potential.kind", "unknown potential '" + potential.kind + "'");
        }
        if (!(carleman.lambda > 0.0)) throw ValidationError("carleman.lambda", "must be positive");
        if (carleman.k < 2) throw ValidationError("carleman.k", "time exponent must be >= 2");
        if (carleman.count < 1) throw ValidationError("carleman.count", "must be >= 1");
        if (carleman.s_multipliers.empty()) throw ValidationError("carleman.s_multipliers", "must not be empty");
        if (convergence.levels < 2) throw ValidationError("convergence.levels", "need >= 2 levels");
        if (out_dir.empty()) throw ValidationError("out_dir", "must not be empty");
    }
};

namespace config_detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ValidationError(where.empty() ? "<root>" : where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
    }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string field = where.empty() ? key : where + "." + key;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ValidationError(field, "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ValidationError(field, "expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ValidationError(field, "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ValidationError(field, "expected a string");
        }
        out = v.get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(field, e.what());
    }
}

inline Nonlinearity parse_nonlinearity(const json& j) {
    check_keys(j, "physical.nonlinearity", {"kind", "slope", "amplitude", "s", "f"});
    std::string kind = "zero";
    read(j, "kind", "physical.nonlinearity", kind);
    if (kind == "zero") return Nonlinearity::zero();
    if (kind == "linear") {
        double c = 1.0;
        read(j, "slope", "physical.nonlinearity", c);
        return Nonlinearity::linear(c);
    }
    if (kind == "sine") {
        double c = 1.0;
        read(j, "amplitude", "physical.nonlinearity", c);
        return Nonlinearity::sine(c);
    }
    if (kind == "table") {
        std::vector<double> s, f;
        read(j, "s", "physical.nonlinearity", s);
        read(j, "f", "physical.nonlinearity", f);
        return Nonlinearity::table(std::move(s), std::move(f));
    }
    throw ValidationError("physical.nonlinearity.kind", "unknown nonlinearity '" + kind + "'");
}

} // namespace config_detail

inline json nonlinearity_to_json(const Nonlinearity& nl) {
    json j{{"kind", to_string(nl.kind())}};
    switch (nl.kind()) {
    case NonlinearityKind::Linear: j["slope"] = nl.coefficient(); break;
    case NonlinearityKind::Sine: j["amplitude"] = nl.coefficient(); break;
    case NonlinearityKind::Table:
        j["s"] = nl.table_s();
        j["f"] = nl.table_f();
        break;
    case NonlinearityKind::Zero: break;
    }
    return j;
}

/// Resolved configuration as JSON; parse_config(to_json(c)) reproduces c.
inline json to_json(const ExperimentConfig& c) {
    return json{
        {"scenario", to_string(c.scenario)},
        {"physical",
         {{"R0", c.physical.R0},
          {"R_star", c.physical.R_star},
          {"E", c.physical.E},
          {"T", c.physical.T},
          {"b", c.physical.b},
          {"b0", c.physical.b0},
          {"nonlinearity", nonlinearity_to_json(c.physical.nonlinearity)}}},
        {"initial",
         {{"kind", c.initial.kind}, {"amplitude", c.initial.amplitude}, {"mode", c.initial.mode}, {"h1", c.initial.h1}}},
        {"path", {{"kind", c.path.kind}, {"amplitude", c.path.amplitude}, {"frequency", c.path.frequency}}},
        {"potential", {{"kind", c.potential.kind}, {"value", c.potential.value}}},
        {"scheme",
         {{"N", c.scheme.N}, {"M", c.scheme.M}, {"theta", c.scheme.theta}, {"flux_order", c.scheme.flux_order}}},
        {"hum",
         {{"epsilon", c.hum.epsilon},
          {"variant", to_string(c.hum.variant)},
          {"cg_tol", c.hum.cg_tol},
          {"cg_max_iters", c.hum.cg_max_iters},
          {"prox_steps", c.hum.prox_steps}}},
        {"fixedpoint",
         {{"K", c.fixedpoint.K},
          {"K1", c.fixedpoint.K1},
          {"max_outer", c.fixedpoint.max_outer},
          {"fp_tol", c.fixedpoint.fp_tol},
          {"epsilon_schedule", c.fixedpoint.epsilon_schedule},
          {"flip_sign", c.fixedpoint.flip_sign},
          {"final_tol_rel", c.fixedpoint.final_tol_rel}}},
        {"carleman",
         {{"lambda", c.carleman.lambda},
          {"s", c.carleman.s},
          {"k", c.carleman.k},
          {"count", c.carleman.count},
          {"modes", c.carleman.modes},
          {"s_multipliers", c.carleman.s_multipliers},
          {"margin", c.carleman.margin},
          {"weighted_observation", c.carleman.weighted_observation}}},
        {"observability",
         {{"delta", c.observability.delta},
          {"tol", c.observability.tol},
          {"max_iters", c.observability.max_iters},
          {"cg_tol", c.observability.cg_tol},
          {"cg_max_iters", c.observability.cg_max_iters}}},
        {"convergence", {{"levels", c.convergence.levels}}},
        {"stefan", {{"corrector", c.corrector}}},
        {"seed", c.seed},
        {"out_dir", c.out_dir}};
}

inline ExperimentConfig parse_config(const json& j) {
    using namespace config_detail;
    check_keys(j, "", {"scenario", "physical", "initial", "path", "potential", "scheme", "hum", "fixedpoint",
                       "carleman", "observability", "convergence", "stefan", "seed", "out_dir"});
    ExperimentConfig c;
    std::string scenario = "forward";
    read(j, "scenario", "", scenario);
    c.scenario = parse_scenario(scenario);
    read(j, "seed", "", c.seed);
    read(j, "out_dir", "", c.out_dir);

    if (j.contains("physical")) {
        const auto& p = j["physical"];
        check_keys(p, "physical", {"R0", "R_star", "E", "T", "b", "b0", "nonlinearity"});
        read(p, "R0", "physical", c.physical.R0);
        read(p, "R_star", "physical", c.physical.R_star);
        read(p, "E", "physical", c.physical.E);
        read(p, "T", "physical", c.physical.T);
        read(p, "b", "physical", c.physical.b);
        read(p, "b0", "physical", c.physical.b0);
        if (p.contains("nonlinearity")) c.physical.nonlinearity = parse_nonlinearity(p["nonlinearity"]);
    }
    if (j.contains("initial")) {
        const auto& p = j["initial"];
        check_keys(p, "initial", {"kind", "amplitude", "mode", "h1"});
        read(p, "kind", "initial", c.initial.kind);
        read(p, "amplitude", "initial", c.initial.amplitude);
        read(p, "mode", "initial", c.initial.mode);
        read(p, "h1", "initial", c.initial.h1);
    }
    if (j.contains("path")) {
        const auto& p = j["path"];
        check_keys(p, "path", {"kind", "amplitude", "frequency"});
        read(p, "kind", "path", c.path.kind);
        read(p, "amplitude", "path", c.path.amplitude);
        read(p, "frequency", "path", c.path.frequency);
    }
    if (j.contains("potential")) {
        const auto& p = j["potential"];
        check_keys(p, "potential", {"kind", "value"});
        read(p, "kind", "potential", c.potential.kind);
        read(p, "value", "potential", c.potential.value);
    }
    if (j.contains("scheme")) {
        const auto& p = j["scheme"];
        check_keys(p, "scheme", {"N", "M", "theta", "flux_order"});
        read(p, "N", "scheme", c.scheme.N);
        read(p, "M", "scheme", c.scheme.M);
        read(p, "theta", "scheme", c.scheme.theta);
        read(p, "flux_order", "scheme", c.scheme.flux_order);
    }
    if (j.contains("hum")) {
        const auto& p = j["hum"];
        check_keys(p, "hum", {"epsilon", "variant", "cg_tol", "cg_max_iters", "prox_steps"});
        read(p, "epsilon", "hum", c.hum.epsilon);
        std::string variant = to_string(c.hum.variant);
        read(p, "variant", "hum", variant);
        c.hum.variant = parse_hum_variant(variant);
        read(p, "cg_tol", "hum", c.hum.cg_tol);
        read(p, "cg_max_iters", "hum", c.hum.cg_max_iters);
        read(p, "prox_steps", "hum", c.hum.prox_steps);
    }
    if (j.contains("fixedpoint")) {
        const auto& p = j["fixedpoint"];
        check_keys(p, "fixedpoint", {"K", "K1", "max_outer", "fp_tol", "epsilon_schedule", "flip_sign", "final_tol_rel"});
        read(p, "K", "fixedpoint", c.fixedpoint.K);
        read(p, "K1", "fixedpoint", c.fixedpoint.K1);
        read(p, "max_outer", "fixedpoint", c.fixedpoint.max_outer);
        read(p, "fp_tol", "fixedpoint", c.fixedpoint.fp_tol);
        read(p, "epsilon_schedule", "fixedpoint", c.fixedpoint.epsilon_schedule);
        read(p, "flip_sign", "fixedpoint", c.fixedpoint.flip_sign);
        read(p, "final_tol_rel", "fixedpoint", c.fixedpoint.final_tol_rel);
    }
    if (j.contains("carleman")) {
        const auto& p = j["carleman"];
        check_keys(p, "carleman", {"lambda", "s", "k", "count", "modes", "s_multipliers", "margin", "weighted_observation"});
        read(p, "lambda", "carleman", c.carleman.lambda);
        read(p, "s", "carleman", c.carleman.s);
        read(p, "k", "carleman", c.carleman.k);
        read(p, "count", "carleman", c.carleman.count);
        read(p, "modes", "carleman", c.carleman.modes);
        read(p, "s_multipliers", "carleman", c.carleman.s_multipliers);
        read(p, "margin", "carleman", c.carleman.margin);
        read(p, "weighted_observation", "carleman", c.carleman.weighted_observation);
    }
    if (j.contains("observability")) {
        const auto& p = j["observability"];
        check_keys(p, "observability", {"delta", "tol", "max_iters", "cg_tol", "cg_max_iters"});
        read(p, "delta", "observability", c.observability.delta);
        read(p, "tol", "observability", c.observability.tol);
        read(p, "max_iters", "observability", c.observability.max_iters);
        read(p, "cg_tol", "observability", c.observability.cg_tol);
        read(p, "cg_max_iters", "observability", c.observability.cg_max_iters);
    }
    if (j.contains("convergence")) {
        check_keys(j["convergence"], "convergence", {"levels"});
        read(j["convergence"], "levels", "convergence", c.convergence.levels);
    }
    if (j.contains("stefan")) {
        check_keys(j["stefan"], "stefan", {"corrector"});
        read(j["stefan"], "corrector", "stefan", c.corrector);
    }
    c.physical.z0 = c.initial.sampler(c.physical.R0);
    c.validate();
    c.raw = to_json(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("config", "cannot open " + file);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

/// Boundary path for the fixed-path scenarios; starts at R0.
inline BoundaryPath make_path(const ExperimentConfig& c, int M) {
    const double R0 = c.physical.R0;
    const double T = c.physical.T;
    const double amp = c.path.amplitude * R0;
    if (c.path.kind == "constant" || amp == 0.0) return BoundaryPath::constant(R0, T, M);
    if (c.path.kind == "sinusoid") {
        const double w = 2.0 * std::numbers::pi * c.path.frequency / T;
        return BoundaryPath::sample([=](double t) { return R0 + amp * std::sin(w * t); },
                                    [=](double t) { return amp * w * std::cos(w * t); }, T, M);
    }
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * std::numbers::pi);
    double a[3], p[3], total = 0.0;
    for (int k = 0; k < 3; ++k) {
        a[k] = u(rng);
        p[k] = ph(rng);
        total += std::abs(a[k]);
    }
    for (double& v : a) v *= amp / std::max(total, 1e-12) / 2.0;
    auto R = [=](double t) {
        double r = R0;
        for (int k = 0; k < 3; ++k) r += a[k] * (std::sin((k + 1) * std::numbers::pi * t / T + p[k]) - std::sin(p[k]));
        return r;
    };
    auto dR = [=](double t) {
        double d = 0.0;
        for (int k = 0; k < 3; ++k)
            d += a[k] * (k + 1) * std::numbers::pi / T * std::cos((k + 1) * std::numbers::pi * t / T + p[k]);
        return d;
    };
    return BoundaryPath::sample(R, dR, T, M);
}

inline SpaceTimeField make_potential(const ExperimentConfig& c, int N, int M) {
    if (c.potential.kind == "zero") return zero_potential(N, M);
    if (c.potential.kind == "constant") return constant_potential(N, M, c.potential.value);
    std::mt19937_64 rng(c.seed + 7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c0 = u(rng), c1 = u(rng), w = 3.0 * u(rng);
    const double scale = c.potential.value == 0.0 ? 1.0 : c.potential.value;
    SpaceTimeField a(FieldRole::Potential, N, M);
    for (int j = 0; j <= M; ++j)
        for (int i = 0; i <= N; ++i)
            a(i, j) = scale * (c0 + c1 * std::sin(std::numbers::pi * i / N + w * j / M));
    return a;
}

} // namespace radctl
