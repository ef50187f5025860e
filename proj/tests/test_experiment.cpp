#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>

#include "radctl/experiment.hpp"

using namespace radctl;

namespace {

fs::path scratch_root() {
    return fs::temp_directory_path() / ("radctl-test-" + std::to_string(::getpid()));
}

struct ScratchCleanup : ::testing::Environment {
    void TearDown() override { fs::remove_all(scratch_root()); }
};
const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

fs::path scratch(const std::string& name) {
    const auto dir = scratch_root() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

json small_forward() {
    return json{{"scenario", "forward"},
                {"physical", {{"T", 0.1}}},
                {"initial", {{"kind", "sine"}}},
                {"scheme", {{"N", 16}, {"M", 32}}}};
}

} // namespace

TEST(Config, DefaultsParse) {
    const auto c = parse_config(json::object());
    EXPECT_EQ(c.scenario, Scenario::Forward);
    EXPECT_EQ(c.physical.b, 0.3);
    EXPECT_EQ(c.scheme.N, 50);
    EXPECT_EQ(c.raw["scenario"], "forward");
}

TEST(Config, RoundTripThroughResolvedJson) {
    json j = small_forward();
    j["physical"]["nonlinearity"] = {{"kind", "table"}, {"s", {-1.0, 0.0, 2.0}}, {"f", {-0.5, 0.0, 1.0}}};
    j["hum"] = {{"variant", "nonsmooth"}, {"epsilon", 1e-3}};
    j["fixedpoint"] = {{"epsilon_schedule", {1e-2, 1e-4}}};
    const auto a = parse_config(j);
    const auto b = parse_config(a.raw);
    EXPECT_EQ(a.raw, b.raw);
    EXPECT_EQ(b.hum.variant, HUMVariant::ExactNonsmooth);
    EXPECT_EQ(b.physical.nonlinearity.kind(), NonlinearityKind::Table);
    EXPECT_EQ(b.fixedpoint.epsilon_schedule.size(), 2u);
}

TEST(Config, OrderingViolationNamesTheChain) {
    json j = small_forward();
    j["physical"]["b"] = 0.6;
    try {
        parse_config(j);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "physical.b");
        EXPECT_NE(std::string(e.what()).find("b0 < b < R_star < R0 < E"), std::string::npos);
    }
}

TEST(Config, UnknownKeysAndBadTypesCarryFieldPaths) {
    auto field_of = [](const json& j) {
        try {
            parse_config(j);
        } catch (const ValidationError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(field_of({{"bogus", 1}}), "bogus");
    EXPECT_EQ(field_of({{"scheme", {{"n", 10}}}}), "scheme.n");
    EXPECT_EQ(field_of({{"scheme", {{"N", "ten"}}}}), "scheme.N");
    EXPECT_EQ(field_of({{"scheme", {{"N", 10.5}}}}), "scheme.N");
    EXPECT_EQ(field_of({{"scheme", {{"N", 4}}}}), "scheme.N");
    EXPECT_EQ(field_of({{"scenario", "nope"}}), "scenario");
    EXPECT_EQ(field_of({{"hum", {{"epsilon", -1.0}}}}), "hum.epsilon");
    EXPECT_EQ(field_of({{"initial", {{"kind", "square"}}}}), "initial.kind");
    EXPECT_EQ(field_of({{"physical", {{"nonlinearity", {{"kind", "cubic"}}}}}}), "physical.nonlinearity.kind");
    EXPECT_EQ(field_of({{"path", {{"amplitude", 1.5}}}}), "path.amplitude");
}

TEST(Config, MalformedFileIsAValidationError) {
    const auto dir = scratch("malformed");
    write_text(dir / "bad.json", "{ \"scenario\": ");
    EXPECT_THROW(load_config((dir / "bad.json").string()), ValidationError);
    EXPECT_THROW(load_config((dir / "missing.json").string()), ValidationError);
}

TEST(Config, H1SineHitsItsTargetSeminorm) {
    ProfileSpec p;
    p.kind = "h1_sine";
    p.h1 = 0.05;
    const auto u = p.sample(ReferenceGrid(400), 1.0);
    EXPECT_NEAR(h1_seminorm(u, 1.0), 0.05, 1e-5);
}

TEST(Config, PathsStartAtR0) {
    for (const char* kind : {"constant", "sinusoid", "random"}) {
        json j = small_forward();
        j["path"] = {{"kind", kind}, {"amplitude", 0.1}};
        const auto c = parse_config(j);
        const auto p = make_path(c, 40);
        EXPECT_DOUBLE_EQ(p.radius(0), 1.0) << kind;
        EXPECT_LE(p.max_radius(), 1.1 + 1e-12) << kind;
        EXPECT_GE(p.min_radius(), 0.9 - 1e-12) << kind;
    }
}

TEST(OutDir, Precedence) {
    auto c = parse_config(json{{"out_dir", "from-config"}});
    ::unsetenv("RADCTL_OUT_DIR");
    EXPECT_EQ(resolve_out_dir(std::nullopt, c), fs::path("from-config"));
    ::setenv("RADCTL_OUT_DIR", "from-env", 1);
    EXPECT_EQ(resolve_out_dir(std::nullopt, c), fs::path("from-env"));
    EXPECT_EQ(resolve_out_dir(std::string("from-cli"), c), fs::path("from-cli"));
    ::unsetenv("RADCTL_OUT_DIR");
}

TEST(Run, ForwardWritesArtifactsAtomically) {
    const auto dir = scratch("forward");
    const auto out = run_experiment(parse_config(small_forward()), dir);
    ASSERT_TRUE(out.ok) << out.error;
    for (const char* f : {"summary.json", "manifest.json", "state.csv", "path.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    for (const auto& e : fs::directory_iterator(dir)) {
        EXPECT_EQ(e.path().string().find(".tmp."), std::string::npos) << e.path();
    }
    const auto s = read_json(dir / "summary.json");
    EXPECT_EQ(s["status"], "ok");
    EXPECT_TRUE(s.contains("l2_error_T"));
    const auto m = read_json(dir / "manifest.json");
    EXPECT_EQ(m["version"], kVersion);
    EXPECT_EQ(m["config"]["scheme"]["N"], 16);

    const auto state = read_field_csv(dir / "state.csv", FieldRole::State);
    EXPECT_EQ(state.N(), 16);
    EXPECT_EQ(state.M(), 32);
    EXPECT_NEAR(state(8, 0), 1.0, 1e-15);
}

TEST(Run, FieldCsvRoundTripIsExact) {
    const auto dir = scratch("csv");
    SpaceTimeField f(FieldRole::Adjoint, 5, 3);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (double& v : f.values()) v = g(rng) * 1e-7;
    write_field_csv(dir / "f.csv", f);
    const auto back = read_field_csv(dir / "f.csv", FieldRole::Adjoint);
    EXPECT_EQ(back.values(), f.values());
}

TEST(Run, SameConfigSameSummary) {
    json j = small_forward();
    j["scenario"] = "hum";
    j["path"] = {{"kind", "random"}, {"amplitude", 0.1}};
    j["potential"] = {{"kind", "random"}, {"value", 0.5}};
    const auto c = parse_config(j);
    const auto a = run_experiment(c, scratch("det-a"));
    const auto b = run_experiment(c, scratch("det-b"));
    ASSERT_TRUE(a.ok) << a.error;
    EXPECT_EQ(a.summary.dump(), b.summary.dump());
}

TEST(Run, EigenmodeErrorDropsFourfold) {
    json j = small_forward();
    j["scheme"] = {{"N", 50}, {"M", 100}};
    const double e1 = run_experiment(parse_config(j), scratch("eig1")).summary["l2_error_T"];
    j["scheme"] = {{"N", 100}, {"M", 200}};
    const double e2 = run_experiment(parse_config(j), scratch("eig2")).summary["l2_error_T"];
    EXPECT_GT(e1 / e2, 3.5);
    EXPECT_LT(e1 / e2, 4.5);
}

TEST(Run, FixedPointZeroDataConvergesInOneIteration) {
    json j = small_forward();
    j["scenario"] = "fixedpoint";
    j["initial"] = {{"kind", "zero"}};
    const auto dir = scratch("fp-zero");
    const auto out = run_experiment(parse_config(j), dir);
    ASSERT_TRUE(out.ok) << out.error;
    EXPECT_EQ(out.summary["iterations"], 1);
    EXPECT_EQ(out.summary["R_T"], 1.0);
    std::ifstream in(dir / "fixedpoint-history.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("iteration,epsilon,dz,dR,ddR,final_norm,cost_ratio,R_min,R_max", 0), 0u);
}

TEST(Run, FailureIsReportedNotThrown) {
    json j = small_forward();
    j["scenario"] = "hum";
    j["hum"] = {{"cg_max_iters", 1}, {"cg_tol", 1e-14}};
    const auto dir = scratch("fail");
    const auto out = run_experiment(parse_config(j), dir);
    EXPECT_FALSE(out.ok);
    const auto s = read_json(dir / "summary.json");
    EXPECT_EQ(s["status"], "failed");
    EXPECT_TRUE(s.contains("error_history"));
}

TEST(Sweep, EpsilonScheduleFinalNormNonIncreasing) {
    const auto dir = scratch("sweep-eps");
    std::vector<std::string> files;
    for (const char* eps : {"1e-2", "1e-4", "1e-6"}) {
        json j{{"scenario", "hum"}, {"hum", {{"epsilon", std::stod(eps)}}}, {"scheme", {{"N", 30}, {"M", 60}}}};
        const auto f = dir / ("eps" + std::string(eps) + ".json");
        write_text(f, j.dump());
        files.push_back(f.string());
    }
    const auto matched = expand_glob((dir / "eps*.json").string());
    ASSERT_EQ(matched.size(), 3u);
    const auto rep = run_sweep(matched, dir / "out", std::nullopt, 3);
    ASSERT_TRUE(rep.ok());
    ASSERT_TRUE(fs::exists(rep.csv));

    std::map<double, double> by_eps;
    for (const auto& r : rep.rows) by_eps[r.outcome.summary["epsilon"]] = r.outcome.summary["final_norm"];
    double prev = INFINITY;
    for (auto it = by_eps.rbegin(); it != by_eps.rend(); ++it) {
        EXPECT_LE(it->second, prev) << "epsilon " << it->first;
        prev = it->second;
    }

    std::ifstream in(rep.csv);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, 4);
}

TEST(Sweep, PartialFailureIsRecordedPerRow) {
    const auto dir = scratch("sweep-fail");
    write_text(dir / "a.json", small_forward().dump());
    write_text(dir / "b.json", json{{"scheme", {{"N", 3}}}}.dump());
    const auto rep = run_sweep(expand_glob((dir / "*.json").string()), dir / "out", std::nullopt, 2);
    EXPECT_FALSE(rep.ok());
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_TRUE(rep.rows[0].outcome.ok);
    EXPECT_FALSE(rep.rows[1].outcome.ok);
    EXPECT_NE(rep.rows[1].outcome.error.find("scheme.N"), std::string::npos);
}

TEST(Sweep, EmptyListIsAUsageError) {
    EXPECT_THROW(run_sweep({}, scratch("sweep-empty")), ValidationError);
    EXPECT_TRUE(expand_glob("/nonexistent-dir-radctl/*.json").empty());
}

TEST(Sweep, IdenticalConfigsGiveIdenticalScalars) {
    const auto dir = scratch("sweep-det");
    json j = small_forward();
    j["scenario"] = "observability";
    j["path"] = {{"kind", "random"}, {"amplitude", 0.1}};
    write_text(dir / "x.json", j.dump());
    const std::vector<std::string> files{(dir / "x.json").string(), (dir / "x.json").string()};
    const auto rep = run_sweep(files, dir / "out", 7, 2);
    ASSERT_TRUE(rep.ok()) << rep.rows[0].outcome.error;
    EXPECT_NE(rep.rows[0].out_dir, rep.rows[1].out_dir);
    EXPECT_EQ(rep.rows[0].outcome.summary.dump(), rep.rows[1].outcome.summary.dump());
    EXPECT_EQ(rep.rows[0].outcome.summary["seed"], 7);
}
