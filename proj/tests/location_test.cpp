#include <gtest/gtest.h>

#include "sspca/location.hpp"
#include "sspca/sampler.hpp"
#include "test_util.hpp"

using namespace sspca;

namespace {

// Brute-force minimizer of Σ‖x_i − μ‖ in 2-D: a coarse grid over the data's
// bounding box, then compass search with halving steps.
Vector grid_search_median(const DataMatrix& x) {
    double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (int j = 0; j < 2; ++j) {
            lo[j] = std::min(lo[j], x(i, j));
            hi[j] = std::max(hi[j], x(i, j));
        }
    Vector best{lo[0], lo[1]};
    double best_f = spatial_median_objective(x, best);
    const int steps = 400;
    for (int a = 0; a <= steps; ++a)
        for (int b = 0; b <= steps; ++b) {
            const Vector p{lo[0] + (hi[0] - lo[0]) * a / steps, lo[1] + (hi[1] - lo[1]) * b / steps};
            const double f = spatial_median_objective(x, p);
            if (f < best_f) {
                best_f = f;
                best = p;
            }
        }
    double h = std::max(hi[0] - lo[0], hi[1] - lo[1]) / steps;
    while (h > 1e-12) {
        bool moved = false;
        for (const auto& dir : {Vector{1, 0}, Vector{-1, 0}, Vector{0, 1}, Vector{0, -1}}) {
            const Vector p{best[0] + h * dir[0], best[1] + h * dir[1]};
            const double f = spatial_median_objective(x, p);
            if (f < best_f) {
                best_f = f;
                best = p;
                moved = true;
            }
        }
        if (!moved) h /= 2;
    }
    return best;
}

double residual_at(const DataMatrix& x, const Vector& mu) {
    Vector g(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        Vector diff(x.cols());
        for (std::size_t j = 0; j < x.cols(); ++j) diff[j] = x(i, j) - mu[j];
        const double r = norm2(diff);
        if (r < 1e-12) continue;
        for (std::size_t j = 0; j < x.cols(); ++j) g[j] += diff[j] / r;
    }
    return norm2(g);
}

}  // namespace

TEST(SpatialMedian, SymmetricCross) {
    const auto x = DataMatrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    const auto est = spatial_median(x);
    EXPECT_NEAR(est.center[0], 0.0, 1e-12);
    EXPECT_NEAR(est.center[1], 0.0, 1e-12);
    EXPECT_EQ(est.method, CenterMethod::SpatialMedian);
}

TEST(SpatialMedian, AllRowsEqual) {
    const auto x = DataMatrix::from_rows({{2.5, -1, 4}, {2.5, -1, 4}, {2.5, -1, 4}});
    const auto est = spatial_median(x);
    EXPECT_EQ(est.center, (Vector{2.5, -1, 4}));
    EXPECT_EQ(est.iterations, 0u);
    EXPECT_EQ(est.residual, 0.0);
}

TEST(SpatialMedian, MatchesGridSearchOracle) {
    std::mt19937_64 gen(2718);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<Vector> rows;
        for (int i = 0; i < 7; ++i) rows.push_back({z(gen), 3.0 * z(gen)});
        const auto x = DataMatrix::from_rows(rows);
        const auto est = spatial_median(x, {1e-12, 5000, false});
        const auto oracle = grid_search_median(x);
        EXPECT_LT(std::hypot(est.center[0] - oracle[0], est.center[1] - oracle[1]), 1e-5);
    }
}

TEST(SpatialMedian, OptimumAtDataPoint) {
    // A heavy duplicated point is the median: its weight dominates the pull of the rest.
    const auto x = DataMatrix::from_rows({{0, 0}, {0, 0}, {0, 0}, {0, 0}, {1, 0}, {0, 1}, {-1, -1}});
    const auto est = spatial_median(x);
    EXPECT_NEAR(est.center[0], 0.0, 1e-9);
    EXPECT_NEAR(est.center[1], 0.0, 1e-9);
    EXPECT_EQ(est.residual, 0.0);
}

TEST(SpatialMedian, FirstOrderConditionAndBeatsMean) {
    const EllipticalModel m{Vector(30, 1.5), SpikedCovarianceSpec{30, {{5.0, 5}, {3.0, 5}}, 1.0}, StudentT{3.0}, 9};
    const auto x = sample(m, 300);
    const auto est = spatial_median(x);
    EXPECT_LE(residual_at(x, est.center), 1e-8 * 300);
    EXPECT_LE(spatial_median_objective(x, est.center), spatial_median_objective(x, coordinate_mean(x).center));
}

TEST(SpatialMedian, ObjectiveNonIncreasing) {
    const EllipticalModel m{{}, SpikedCovarianceSpec{10, {{5.0, 3}}, 1.0}, MixtureNormal{0.8, 9.0}, 10};
    const auto x = sample(m, 200);
    SpatialMedianOptions opt;
    opt.record_objective = true;
    const auto est = spatial_median(x, opt);
    ASSERT_GE(est.objective_trace.size(), 2u);
    for (std::size_t t = 1; t < est.objective_trace.size(); ++t)
        EXPECT_LE(est.objective_trace[t], est.objective_trace[t - 1] * (1 + 1e-14));
}

TEST(SpatialMedian, OrthogonalAndShiftEquivariance) {
    std::mt19937_64 gen(44);
    const std::size_t d = 6;
    const EllipticalModel m{{}, SpikedCovarianceSpec{d, {{4.0, 2}}, 1.0}, StudentT{3.0}, 45};
    const auto x = sample(m, 120);
    const auto q = sspca::testing::random_orthogonal(d, gen);
    const auto b = sspca::testing::random_unit(d, gen);
    DataMatrix y(x.rows(), d);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t r = 0; r < d; ++r) {
            double s = 10.0 * b[r];
            for (std::size_t c = 0; c < d; ++c) s += q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x(i, c);
            y(i, r) = s;
        }
    const auto mx = spatial_median(x, {1e-12, 5000, false}).center;
    const auto my = spatial_median(y, {1e-12, 5000, false}).center;
    for (std::size_t r = 0; r < d; ++r) {
        double expected = 10.0 * b[r];
        for (std::size_t c = 0; c < d; ++c) expected += q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * mx[c];
        EXPECT_NEAR(my[r], expected, 1e-8);
    }
}

TEST(SpatialMedian, NotConvergedCarriesBestIterate) {
    const EllipticalModel m{{}, SpikedCovarianceSpec{10, {{5.0, 3}}, 1.0}, Gaussian{}, 3};
    const auto x = sample(m, 100);
    try {
        spatial_median(x, {1e-15, 2, false});
        FAIL();
    } catch (const NotConverged& e) {
        EXPECT_EQ(e.iterate().size(), 10u);
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(SpatialMedian, RateOfConsistency) {
    auto mean_error = [](std::size_t n) {
        double total = 0.0;
        for (std::uint64_t rep = 0; rep < 100; ++rep) {
            const EllipticalModel m{{}, SpikedCovarianceSpec{20, {{5.0, 4}, {3.0, 4}}, 1.0}, Gaussian{},
                                    substream_seed(n, rep)};
            total += norm2(spatial_median(sample(m, n)).center);
        }
        return total / 100.0;
    };
    const double ratio = mean_error(200) / mean_error(400);
    EXPECT_GE(ratio, 1.2);
    EXPECT_LE(ratio, 1.7);
}

TEST(CoordinateMean, Basic) {
    const auto x = DataMatrix::from_rows({{0, 0}, {2, 4}});
    EXPECT_EQ(coordinate_mean(x).center, (Vector{1, 2}));
    EXPECT_EQ(coordinate_median(DataMatrix::from_rows({{0, 5}, {2, 1}, {9, 3}, {1, 2}})), (Vector{1.5, 2.5}));
}
