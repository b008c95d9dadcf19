#include <gtest/gtest.h>

#include <sstream>

#include "sspca/metrics.hpp"
#include "sspca/sampler.hpp"
#include "sspca/scatter.hpp"
#include "test_util.hpp"

using namespace sspca;

namespace {

std::vector<Vector> random_basis(std::size_t d, std::size_t m, std::mt19937_64& gen) {
    const auto q = sspca::testing::random_orthogonal(d, gen);
    std::vector<Vector> cols(m, Vector(d));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < d; ++i) cols[j][i] = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return cols;
}

Eigen::MatrixXd as_matrix(const std::vector<Vector>& cols) {
    Eigen::MatrixXd u(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < cols[j].size(); ++i) u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
    return u;
}

}  // namespace

TEST(SinAngle, Basics) {
    const Vector v{0.6, 0.8};
    EXPECT_EQ(sin_angle(v, v), 0.0);
    EXPECT_EQ(sin_angle(v, Vector{-0.6, -0.8}), 0.0);
    EXPECT_EQ(sin_angle(unit_vector(3, 0), unit_vector(3, 1)), 1.0);
    EXPECT_NEAR(sin_angle(Vector{1, 0}, v), 0.8, 1e-15);
    EXPECT_THROW(sin_angle(Vector{1, 1}, v), InvalidInput);
    EXPECT_THROW(sin_angle(Vector{1, 0, 0}, v), InvalidInput);
}

TEST(SinAngle, OrthogonalInvariance) {
    std::mt19937_64 gen(201);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = sspca::testing::random_unit(7, gen), b = sspca::testing::random_unit(7, gen);
        const auto q = sspca::testing::random_orthogonal(7, gen);
        Vector qa(7, 0.0), qb(7, 0.0);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) {
                qa[static_cast<std::size_t>(i)] += q(i, j) * a[static_cast<std::size_t>(j)];
                qb[static_cast<std::size_t>(i)] += q(i, j) * b[static_cast<std::size_t>(j)];
            }
        EXPECT_NEAR(sin_angle(a, b), sin_angle(qa, qb), 1e-14);
    }
}

TEST(SubspaceDistance, Cases) {
    EXPECT_NEAR(subspace_distance({unit_vector(3, 0)}, {unit_vector(3, 1)}), std::sqrt(2.0), 1e-15);
    std::mt19937_64 gen(202);
    for (int rep = 0; rep < 10; ++rep) {
        const auto u1 = random_basis(9, 3, gen), u2 = random_basis(9, 3, gen);
        EXPECT_NEAR(subspace_distance(u1, u1), 0.0, 1e-14);
        const Eigen::MatrixXd a = as_matrix(u1), b = as_matrix(u2);
        const double oracle = (a * a.transpose() - b * b.transpose()).norm();
        EXPECT_NEAR(subspace_distance(u1, u2), oracle, 1e-12);
        // Right rotation of a basis leaves the subspace unchanged.
        const Eigen::MatrixXd r = sspca::testing::random_orthogonal(3, gen);
        const Eigen::MatrixXd ar = a * r;
        std::vector<Vector> rotated(3, Vector(9));
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 9; ++i) rotated[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = ar(i, j);
        EXPECT_NEAR(subspace_distance(rotated, u2), oracle, 1e-12);
    }
    EXPECT_THROW(subspace_distance({Vector{1, 0}, Vector{1, 0}}, {Vector{1, 0}, Vector{0, 1}}), InvalidInput);
    EXPECT_THROW(subspace_distance({}, {}), InvalidInput);
}

TEST(RestrictedSpectralNorm, Cases) {
    EXPECT_DOUBLE_EQ(restricted_spectral_norm(SymMatrix::diagonal(Vector{1, -5, 2}), 1), 5.0);
    std::mt19937_64 gen(203);
    for (int rep = 0; rep < 10; ++rep) {
        const auto m = sspca::testing::random_symmetric(6, gen);
        EXPECT_NEAR(restricted_spectral_norm(m, 6), spectral_norm(m), 1e-10);
        EXPECT_DOUBLE_EQ(restricted_spectral_norm(m, 2), std::abs(combinatoric_sparse_pc(m, 2).rayleigh));
        for (std::size_t s = 2; s <= 6; ++s)
            EXPECT_GE(restricted_spectral_norm(m, s), restricted_spectral_norm(m, s - 1) - 1e-12);
    }
    EXPECT_THROW(restricted_spectral_norm(SymMatrix::identity(26), 1), TooLarge);
}

TEST(EffectiveRank, Cases) {
    EXPECT_DOUBLE_EQ(effective_rank(SymMatrix::identity(7)), 7.0);
    EXPECT_NEAR(effective_rank(SymMatrix::outer(Vector{0.6, 0.8, 0})), 1.0, 1e-14);
    EXPECT_THROW(effective_rank(SymMatrix(3)), InvalidInput);
    const EllipticalModel m{{}, SpikedCovarianceSpec{20, {{5.0, 4}}, 1.0}, Gaussian{}, 204};
    const auto s = sscm(sample(m, 500)).matrix;
    EXPECT_NEAR(effective_rank(s), s.trace() / sym_eigen(s).front().value, 1e-12);
    EXPECT_NEAR(effective_rank(s), 1.0 / sym_eigen(s).front().value, 1e-12);
}

TEST(Leverage, SaturatedPair) {
    const auto h = leverage_influence(Vector{3, 1}, Vector{0, 2});
    EXPECT_DOUBLE_EQ(h[0], 1.0);
    EXPECT_DOUBLE_EQ(h[1], 1.0);
}

TEST(Leverage, EquallySpacedMatchesHatMatrix) {
    const Vector x{1, 2, 3, 4, 5};
    const auto h = leverage_influence(Vector{2, 7, 1, 8, 2}, x);
    Eigen::MatrixXd design(5, 2);
    for (int i = 0; i < 5; ++i) design.row(i) << 1.0, x[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd hat = design * (design.transpose() * design).inverse() * design.transpose();
    const Vector expected{0.6, 0.3, 0.2, 0.3, 0.6};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(h[i], expected[i], 1e-14);
        EXPECT_NEAR(h[i], hat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), 1e-12);
    }
    EXPECT_EQ(flag_leverage(h, 0.5), (std::vector<std::size_t>{0, 4}));
}

TEST(Leverage, SumsToTwoAndErrors) {
    std::mt19937_64 gen(205);
    std::student_t_distribution<double> t(3.0);
    for (int rep = 0; rep < 20; ++rep) {
        Vector a(50), b(50);
        for (std::size_t i = 0; i < 50; ++i) {
            a[i] = t(gen);
            b[i] = t(gen);
        }
        const auto h = leverage_influence(a, b);
        double sum = 0.0;
        for (double v : h) sum += v;
        EXPECT_NEAR(sum, 2.0, 1e-10);
    }
    EXPECT_THROW(leverage_influence(Vector{1, 2, 3}, Vector{4, 4, 4}), InvalidInput);
    EXPECT_THROW(leverage_influence(Vector{1, 2}, Vector{4, 5, 6}), InvalidInput);
    EXPECT_THROW(leverage_influence(Vector{1}, Vector{4}), InvalidInput);
}

TEST(MetricCsv, RoundTrip) {
    const std::vector<MetricRecord> recs{
        {"sin_angle", 0.1234567890123, {{"method", "SSPCA"}, {"n", "200"}, {"replication", "3"}}},
        {"rayleigh", -2.5e-300, {}},
        {"leverage", 1.0 / 3.0, {{"component", "2"}, {"seed", "18446744073709551615"}}},
    };
    std::stringstream ss;
    write_metric_csv(ss, recs);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "name,value,scenario,method,distribution,n,d,s,k,component,replication,seed");
    EXPECT_EQ(read_metric_csv(ss), recs);
}

TEST(MetricCsv, Errors) {
    std::stringstream ss;
    EXPECT_THROW(write_metric_record(ss, {"x", 1.0, {{"colour", "red"}}}), InvalidInput);
    EXPECT_THROW(write_metric_record(ss, {"x", 1.0, {{"method", "a,b"}}}), InvalidInput);
    EXPECT_THROW(write_metric_record(ss, {"x", std::nan(""), {}}), InvalidInput);
    std::stringstream bad("name,value,scenario,method,distribution,n,d,s,k,component,replication,seed\nx,abc,,,,,,,,,,\n");
    try {
        read_metric_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 2u);
    }
    std::stringstream ragged("x,1,2\n");
    EXPECT_THROW(read_metric_csv(ragged), ParseError);
}
