// radctl: run one experiment or a sweep of experiments from JSON configs.
//
//   radctl run --config cfg.json [--out-dir DIR] [--seed N]
//   radctl sweep --configs 'configs/*.json' [--out-dir DIR] [--seed N] [--jobs K]
//
// Exit codes: 0 success, 1 run failure, 2 usage or config error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "radctl/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Radial free-boundary heat control experiments"};
    app.require_subcommand(1);

    std::string config_file;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("--config", config_file, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out-dir", out_dir, "Output directory (overrides RADCTL_OUT_DIR and the config)");
    run->add_option("--seed", seed, "Seed override");

    std::string pattern;
    unsigned jobs = 0;
    auto* sweep = app.add_subcommand("sweep", "Run every config matching a glob concurrently");
    sweep->add_option("--configs", pattern, "Glob of config files")->required();
    sweep->add_option("--out-dir", out_dir, "Root output directory");
    sweep->add_option("--seed", seed, "Seed override applied to every run");
    sweep->add_option("--jobs", jobs, "Worker threads (default: hardware concurrency)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            auto cfg = radctl::load_config(config_file);
            if (seed) {
                cfg.seed = *seed;
                cfg.raw["seed"] = *seed;
            }
            const auto dir = radctl::resolve_out_dir(out_dir, cfg);
            const auto out = radctl::run_experiment(cfg, dir);
            std::cout << out.summary.dump(2) << "\n";
            if (!out.ok) {
                std::cerr << "radctl: run failed: " << out.error << "\n";
                return 1;
            }
            return 0;
        }
        const auto files = radctl::expand_glob(pattern);
        if (files.empty()) {
            std::cerr << "radctl: no configs match '" << pattern << "'\n";
            return 2;
        }
        radctl::fs::path root = "out";
        if (out_dir && !out_dir->empty()) {
            root = *out_dir;
        } else if (const char* env = std::getenv("RADCTL_OUT_DIR"); env && *env) {
            root = env;
        }
        const auto rep = radctl::run_sweep(files, root, seed, jobs);
        for (const auto& r : rep.rows) {
            std::cout << (r.outcome.ok ? "ok     " : "FAILED ") << r.config << " -> " << r.out_dir.string();
            if (!r.outcome.ok) std::cout << " (" << r.outcome.error << ")";
            std::cout << "\n";
        }
        std::cout << "sweep.csv: " << rep.csv.string() << "\n";
        return rep.ok() ? 0 : 1;
    } catch (const radctl::ValidationError& e) {
        std::cerr << "radctl: invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "radctl: " << e.what() << "\n";
        return 1;
    }
}
