// Drives a small sine profile to (nearly) zero while the boundary follows the
// Stefan law, then prints the boundary history and the per-iteration changes.
//
//   controlled_melt [N] [epsilon]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "radctl/stefan.hpp"

int main(int argc, char** argv) {
    using namespace radctl;
    const int N = argc > 1 ? std::atoi(argv[1]) : 50;
    const double eps = argc > 2 ? std::atof(argv[2]) : 1e-6;

    PhysicalSetup setup;
    setup.nonlinearity = Nonlinearity::sine();
    const double amp = 0.05 * std::sqrt(2.0) / std::numbers::pi;
    setup.z0 = [amp](double r) { return amp * std::sin(std::numbers::pi * r); };

    const SchemeConfig cfg{N, 2 * N};
    const auto z0 = sample_on_grid(setup.z0, cfg.grid(), setup.R0);
    HUMConfig hum;
    hum.epsilon = eps;
    const auto res = fixed_point_iterate(z0, setup, cfg, FixedPointConfig{}, hum);

    std::printf("%4s %12s %12s %12s %12s\n", "it", "dz", "dR", "final", "cost_ratio");
    for (const auto& r : res.history) {
        std::printf("%4d %12.4e %12.4e %12.4e %12.4e\n", r.iteration, r.dz, r.dR, r.final_norm, r.cost_ratio);
    }
    std::printf("\n%8s %10s\n", "t", "R(t)");
    for (int j = 0; j <= cfg.M; j += cfg.M / 10) {
        std::printf("%8.3f %10.6f\n", res.path.time(j), res.path.radius(j));
    }
    std::printf("\nconverged=%s iterations=%d |z(T)|=%.3e tolerance=%.3e\n", res.converged ? "yes" : "no",
                res.iterations, res.hum.final_norm, res.final_tolerance);
    return res.converged ? 0 : 1;
}
