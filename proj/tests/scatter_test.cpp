#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "sspca/sampler.hpp"
#include "sspca/scatter.hpp"
#include "test_util.hpp"

using namespace sspca;
using sspca::testing::abs_sin;

namespace {

// E[a Y² / (a Y² + Σ_k b_k Y_k²)] = ∫₀^∞ a (1+2ta)^{-3/2} Π_k (1+2t b_k)^{-1/2} dt,
// integrated on t = e^s with the trapezoid rule.
double quadrature_sign_eigenvalue(const Vector& eig, std::size_t j) {
    auto integrand = [&](double t) {
        double log_f = std::log(eig[j]) - 1.5 * std::log1p(2 * t * eig[j]);
        for (std::size_t k = 0; k < eig.size(); ++k)
            if (k != j) log_f -= 0.5 * std::log1p(2 * t * eig[k]);
        return std::exp(log_f);
    };
    const double h = 0.005;
    double total = 0.0;
    for (double s = -60.0; s <= 120.0; s += h) {
        const double t = std::exp(s);
        total += integrand(t) * t * h;
    }
    return total;
}

SymMatrix population_sscm(const SymMatrix& sigma, std::uint64_t seed) {
    const auto pairs = sym_eigen(sigma);
    Vector lambdas;
    for (const auto& p : pairs) lambdas.push_back(p.value);
    const auto pop = population_sscm_eigen(lambdas, 400000, seed);
    SymMatrix s(sigma.dim());
    for (std::size_t j = 0; j < pairs.size(); ++j) s += pop.values[j] * SymMatrix::outer(pairs[j].vector);
    return s;
}

void expect_psd_trace_one(const SymMatrix& m, double trace_tol = 1e-10) {
    EXPECT_NEAR(m.trace(), 1.0, trace_tol);
    for (double l : eigenvalues(m)) {
        EXPECT_GE(l, -1e-12);
        EXPECT_LE(l, 1.0 + 1e-12);
    }
}

const SpikedCovarianceSpec kSpec20{20, {{5.0, 4}, {3.0, 4}}, 1.0};

}  // namespace

TEST(Sscm, AlternatingAxisRows) {
    const auto x = DataMatrix::from_rows({{1, 0, 0}, {-1, 0, 0}, {2, 0, 0}, {-3, 0, 0}});
    const auto s = sscm(x, fixed_center(Vector(3, 0.0)));
    EXPECT_EQ(s.matrix, SymMatrix::outer(unit_vector(3, 0)));
    EXPECT_EQ(s.kind, ScatterKind::SSCM);
}

TEST(Sscm, SingleRow) {
    const auto x = DataMatrix::from_rows({{3, 4}});
    const auto s = sscm(x, fixed_center({0, 0}));
    EXPECT_NEAR(s.matrix(0, 0), 0.36, 1e-15);
    EXPECT_NEAR(s.matrix(0, 1), 0.48, 1e-15);
    EXPECT_NEAR(s.matrix(1, 1), 0.64, 1e-15);
    EXPECT_NEAR(s.matrix.trace(), 1.0, 1e-15);
}

TEST(Sscm, RowsAtCenterContributeNothing) {
    const auto x = DataMatrix::from_rows({{1, 1}, {0, 0}, {-1, 2}, {0, 0}});
    const auto s = sscm(x, fixed_center({0, 0}));
    EXPECT_NEAR(s.matrix.trace(), 0.5, 1e-15);
}

TEST(Sscm, CenterDimensionMismatch) {
    EXPECT_THROW(sscm(DataMatrix::from_rows({{1, 2}}), fixed_center({0, 0, 0})), InvalidInput);
}

TEST(Sscm, SharesLeadingEigenvectorWithSigma) {
    const EllipticalModel m{{}, kSpec20, Gaussian{}, 101};
    const auto x = sample(m, 100000);
    const auto s = sscm(x, fixed_center(Vector(20, 0.0)));
    const auto truth = build_spiked_sigma(kSpec20).eigenvectors[0];
    EXPECT_LE(abs_sin(sym_eigen(s.matrix)[0].vector, truth), 0.03);
}

TEST(Sscm, InvariantsOnHeavyTailedData) {
    std::mt19937_64 gen(8);
    const std::size_t d = 8;
    const EllipticalModel m{Vector(d, 2.0), SpikedCovarianceSpec{d, {{6.0, 3}}, 1.0}, StudentT{3.0}, 102};
    const auto x = sample(m, 500);
    const auto center = spatial_median(x);
    const auto s = sscm(x, center);
    expect_psd_trace_one(s.matrix);
    EXPECT_TRUE(s.center.has_value());

    // Scale invariance: powers of two scale exactly, other factors to rounding.
    for (double c : {4.0, 0.125, 3.7}) {
        DataMatrix cx = x;
        for (std::size_t i = 0; i < cx.rows(); ++i)
            for (double& v : cx.row(i)) v *= c;
        Vector cc = center.center;
        for (double& v : cc) v *= c;
        const auto sc = sscm(cx, fixed_center(cc));
        if (c != 3.7)
            EXPECT_EQ(sc.matrix, s.matrix);
        else
            EXPECT_LE(frobenius_norm(sc.matrix - s.matrix), 1e-14);
    }

    // Orthogonal equivariance.
    const auto q = sspca::testing::random_orthogonal(d, gen);
    DataMatrix qx(x.rows(), d);
    Vector qc(d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            const double qrc = q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            qc[r] += qrc * center.center[c];
            for (std::size_t i = 0; i < x.rows(); ++i) qx(i, r) += qrc * x(i, c);
        }
    const auto sq = sscm(qx, fixed_center(qc));
    const Eigen::MatrixXd expected = q * sspca::testing::to_eigen(s.matrix) * q.transpose();
    EXPECT_LE((sspca::testing::to_eigen(sq.matrix) - expected).norm(), 1e-12);
}

TEST(KendallTau, OnePair) {
    const auto k = kendall_tau(DataMatrix::from_rows({{1, 2, 3}, {0, 0, 1}}));
    EXPECT_NEAR(k.matrix.trace(), 1.0, 1e-15);
    const auto ev = eigenvalues(k.matrix);
    EXPECT_NEAR(ev[0], 1.0, 1e-12);
    EXPECT_NEAR(ev[1], 0.0, 1e-12);
    EXPECT_FALSE(k.center.has_value());
}

TEST(KendallTau, DuplicatedRowsGiveZero) {
    const auto k = kendall_tau(DataMatrix::from_rows({{1, 2}, {1, 2}, {1, 2}}));
    EXPECT_EQ(k.matrix, SymMatrix(2));
}

TEST(KendallTau, NeedsTwoRows) { EXPECT_THROW(kendall_tau(DataMatrix::from_rows({{1, 2}})), InvalidInput); }

TEST(KendallTau, MatchesPopulationSscm) {
    const SpikedCovarianceSpec spec{10, {{5.0, 3}, {3.0, 3}}, 1.0};
    const EllipticalModel m{{}, spec, Gaussian{}, 103};
    const auto x = sample(m, 2000);
    const auto k = kendall_tau(x);
    expect_psd_trace_one(k.matrix);
    const auto pop = population_sscm(build_spiked_sigma(spec).sigma, 7);
    // Entry-wise sampling error of a U-statistic with kernel bounded by 1 is O(1/√n);
    // over 100 entries of size ~0.1 this stays well below 0.05.
    EXPECT_LE(frobenius_norm(k.matrix - pop), 0.05);
    // Heavy tails do not change the population target.
    const auto kt = kendall_tau(sample(EllipticalModel{{}, spec, StudentT{3.0}, 104}, 2000));
    EXPECT_LE(frobenius_norm(kt.matrix - pop), 0.05);
}

TEST(Pearson, HandComputed) {
    const auto p = pearson(DataMatrix::from_rows({{0, 0}, {2, 0}}));
    EXPECT_EQ(p.matrix, SymMatrix::from_rows({{2, 0}, {0, 0}}));
    EXPECT_EQ(pearson(DataMatrix::from_rows({{1, 2}, {1, 2}, {1, 2}})).matrix, SymMatrix(2));
    EXPECT_THROW(pearson(DataMatrix::from_rows({{1, 2}})), InvalidInput);
}

TEST(Pearson, MonteCarloMatchesSigma) {
    const SpikedCovarianceSpec spec{6, {{5.0, 1}, {3.0, 1}}, 1.0};
    const EllipticalModel m{{}, spec, Gaussian{}, 105};
    const std::size_t n = 100000;
    const auto p = pearson(sample(m, n));
    const auto sigma = m.sigma();
    EXPECT_LE(eigenvalues(p.matrix).back(), eigenvalues(p.matrix).front());
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t k = j; k < 6; ++k) {
            const double se = std::sqrt((sigma(j, j) * sigma(k, k) + sigma(j, k) * sigma(j, k)) / static_cast<double>(n));
            EXPECT_NEAR(p.matrix(j, k), sigma(j, k), 3.5 * se);
        }
    EXPECT_GE(eigenvalues(p.matrix).back(), -1e-10);
}

TEST(EigenspaceAgreement, AllThreeEstimatorsAtLargeN) {
    const auto truth = build_spiked_sigma(kSpec20).eigenvectors[0];
    const EllipticalModel m{{}, kSpec20, Gaussian{}, 106};
    const auto big = sample(m, 100000);
    EXPECT_LE(abs_sin(sym_eigen(sscm(big).matrix)[0].vector, truth), 0.05);
    EXPECT_LE(abs_sin(sym_eigen(pearson(big).matrix)[0].vector, truth), 0.05);
    // Kendall's tau is quadratic in n; 5000 rows already give 1.25e7 pairs.
    const auto medium = sample(m, 5000);
    EXPECT_LE(abs_sin(sym_eigen(kendall_tau(medium).matrix)[0].vector, truth), 0.05);
}

TEST(PopulationSscmEigen, IdentityIsUniform) {
    for (std::size_t q : {1u, 2u, 5u}) {
        const auto pop = population_sscm_eigen(Vector(q, 1.0), 200000, q);
        double sum = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            EXPECT_NEAR(pop.values[j], 1.0 / static_cast<double>(q), 3.0 * pop.standard_errors[j] + 1e-15);
            sum += pop.values[j];
        }
        EXPECT_NEAR(sum, 1.0, 1e-14);
    }
    EXPECT_EQ(population_sscm_eigen(Vector{4.0}, 10, 1).values, Vector{1.0});
}

TEST(PopulationSscmEigen, MatchesQuadratureOracle) {
    Vector eig(100, 1.0);
    eig[0] = 5.0;
    eig[1] = 3.0;
    const auto pop = population_sscm_eigen(eig, 200000, 3);
    for (std::size_t j : {0u, 1u, 2u, 99u}) {
        const double exact = quadrature_sign_eigenvalue(eig, j);
        EXPECT_NEAR(pop.values[j], exact, 3.0 * pop.standard_errors[j]) << j;
    }
    // The oracle itself sums to one.
    double total = quadrature_sign_eigenvalue(eig, 0) + quadrature_sign_eigenvalue(eig, 1) +
                   98 * quadrature_sign_eigenvalue(eig, 2);
    EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(PopulationSscmEigen, Errors) {
    EXPECT_THROW(population_sscm_eigen(Vector{}, 10), InvalidInput);
    EXPECT_THROW(population_sscm_eigen(Vector{0.0, 0.0}, 10), InvalidInput);
    EXPECT_THROW(population_sscm_eigen(Vector{1.0, -1.0}, 10), InvalidInput);
}

TEST(ScatterSerialization, RoundTrip) {
    const EllipticalModel m{{}, SpikedCovarianceSpec{5, {{3.0, 2}}, 1.0}, Gaussian{}, 107};
    const auto x = sample(m, 60);
    const auto dir = std::filesystem::temp_directory_path() / "sspca_scatter_test";
    std::filesystem::create_directories(dir);
    for (const auto& est : {sscm(x), kendall_tau(x), pearson(x)}) {
        const auto csv = (dir / "m.csv").string(), js = (dir / "m.json").string();
        write_scatter(est, csv, js);
        const auto back = read_scatter(csv, js);
        EXPECT_EQ(back.matrix, est.matrix);
        EXPECT_EQ(back.kind, est.kind);
        EXPECT_EQ(back.center.has_value(), est.center.has_value());
        if (est.center) EXPECT_EQ(back.center->center, est.center->center);
    }
    std::filesystem::remove_all(dir);
}
