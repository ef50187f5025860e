// Observability constant against the size of the control region on a fixed
// unit ball, for a couple of grid levels.

#include <cstdio>

#include "radctl/observability.hpp"

int main() {
    using namespace radctl;
    const double T = 0.5;
    std::printf("%6s %14s %14s\n", "b", "C(50,100)", "C(100,200)");
    for (double b : {0.1, 0.2, 0.3, 0.4, 0.6, 0.8}) {
        std::printf("%6.2f", b);
        for (int N : {50, 100}) {
            const SchemeConfig cfg{N, 2 * N, 0.6};
            const auto est = estimate_observability(BoundaryPath::constant(1.0, T, cfg.M),
                                                    zero_potential(cfg.N, cfg.M), {b}, cfg);
            std::printf(" %14.6e", est.constant);
        }
        std::printf("\n");
    }
}
