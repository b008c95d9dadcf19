// Estimate a sparse leading eigenvector from heavy-tailed data and compare
// it with the ordinary covariance route.

#include <cstdio>

#include "sspca/experiment.hpp"

int main() {
    using namespace sspca;
    const SpikedCovarianceSpec spec{100, {{5.0, 10}, {3.0, 10}}, 1.0};
    const DataMatrix x = sample(EllipticalModel{{}, spec, StudentT{3.0}, 42}, 200);
    const Vector truth = spike_eigenvectors(spec).front();

    SparsePCConfig cfg;
    cfg.k = 10;
    const auto robust = truncated_power(sscm(x).matrix, cfg);
    const auto classical = truncated_power(pearson(x).matrix, cfg);

    std::printf("SSCM + truncated power:    |sin| = %.3f, support =", sin_angle(robust.vector, truth));
    for (std::size_t j : robust.support) std::printf(" %zu", j);
    std::printf("\nPearson + truncated power: |sin| = %.3f\n", sin_angle(classical.vector, truth));

    TuneConfig tune;
    tune.candidates = {2, 5, 10, 20, 40};
    tune.seed = 7;
    const auto chosen = select_k(x, tune, cfg);
    std::printf("sample-splitting choice of k: %zu\n", chosen.chosen_k);
}
