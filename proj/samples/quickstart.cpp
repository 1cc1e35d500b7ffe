// Exact moments of the count for a summable distance kernel, next to the
// geometric limit, and a short Galton-Watson simulation.
#include <cstdio>
#include <numbers>

#include "limitlab/limitlab.hpp"

int main() {
    using namespace limitlab;

    const auto kernel = kernel_distance(weights_shifted_power(2.0));
    const double zeta = std::numbers::pi * std::numbers::pi / 6.0 - 1.0;
    const auto limit = geo_limit_moments(zeta, 3);
    const auto t = moment_table(kernel, {10, 100, 1000}, 3);
    for (std::size_t h = 0; h < t.horizons.size(); ++h)
        std::printf("n=%-6lld  E N = %.6f  E N^2 = %.6f  E N^3 = %.6f\n", static_cast<long long>(t.horizons[h]),
                    t.at(h, 1), t.at(h, 2), t.at(h, 3));
    std::printf("limit     E N = %.6f  E N^2 = %.6f  E N^3 = %.6f\n", limit[1], limit[2], limit[3]);

    SimulationPlan plan;
    plan.seed = 7;
    plan.replicates = 20000;
    plan.checkpoints = {1000};
    const auto batch = sim_gw(1, plan);
    const auto est = sample_moment(batch.column(0), 1);
    std::printf("simulated E N_1000 = %.4f +- %.4f (exact %.4f)\n", est.mean, est.std_error,
                moment_table(kernel, {1000}, 1).at(0, 1));
}
