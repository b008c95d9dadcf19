#pragma once

// Scatter estimators: sample spatial-sign covariance (SSCM), multivariate
// Kendall's tau, Pearson covariance, and a Monte-Carlo evaluation of the
// population SSCM eigenvalues under a Gaussian model.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "sspca/data.hpp"
#include "sspca/errors.hpp"
#include "sspca/location.hpp"
#include "sspca/numerics.hpp"
#include "sspca/rng.hpp"

namespace sspca {

enum class ScatterKind { SSCM, KendallTau, Pearson };

inline std::string to_string(ScatterKind k) {
    switch (k) {
        case ScatterKind::SSCM: return "sscm";
        case ScatterKind::KendallTau: return "kendall_tau";
        default: return "pearson";
    }
}

inline ScatterKind scatter_kind_from_string(const std::string& s) {
    if (s == "sscm") return ScatterKind::SSCM;
    if (s == "kendall_tau") return ScatterKind::KendallTau;
    if (s == "pearson") return ScatterKind::Pearson;
    throw ParseError("unknown scatter kind '" + s + "'");
}

struct ScatterEstimate {
    SymMatrix matrix;
    ScatterKind kind = ScatterKind::SSCM;
    std::optional<CenterEstimate> center;  // none for Kendall's tau
};

namespace detail {

// Upper-triangle accumulator for sums of outer products u uᵀ.
class OuterSum {
public:
    explicit OuterSum(std::size_t d) : d_(d), acc_(d * d, 0.0) {}

    void add(std::span<const double> u, double weight = 1.0) {
        for (std::size_t j = 0; j < d_; ++j) {
            const double uj = weight * u[j];
            double* row = acc_.data() + j * d_;
            for (std::size_t k = j; k < d_; ++k) row[k] += uj * u[k];
        }
    }

    SymMatrix finish(double scale) const {
        SymMatrix m(d_);
        for (std::size_t j = 0; j < d_; ++j)
            for (std::size_t k = j; k < d_; ++k) m.set(j, k, scale * acc_[j * d_ + k]);
        return m;
    }

private:
    std::size_t d_;
    Vector acc_;
};

}  // namespace detail

/// Spatial sign U(x) = x/‖x‖₂, with U(0) = 0.
inline Vector spatial_sign(std::span<const double> x) {
    Vector u(x.begin(), x.end());
    const double r = norm2(u);
    if (r == 0.0) return Vector(x.size(), 0.0);
    for (double& v : u) v /= r;
    return u;
}

/// (1/n) Σ U(x_i − μ̂) U(x_i − μ̂)ᵀ. Rows equal to the center contribute
/// nothing, so the trace is the fraction of rows away from the center.
inline ScatterEstimate sscm(const DataMatrix& x, const CenterEstimate& center) {
    x.validate();
    if (center.center.size() != x.cols()) throw InvalidInput("sscm: center has the wrong dimension");
    const std::size_t d = x.cols();
    detail::OuterSum sum(d);
    Vector diff(d);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        for (std::size_t j = 0; j < d; ++j) diff[j] = r[j] - center.center[j];
        const double len = norm2(diff);
        if (len == 0.0) continue;
        sum.add(diff, 1.0 / (len * len));
    }
    return {sum.finish(1.0 / static_cast<double>(x.rows())), ScatterKind::SSCM, center};
}

/// SSCM about the sample's own spatial median. A spatial median that runs
/// out of iterations falls back to its best iterate.
inline ScatterEstimate sscm(const DataMatrix& x) {
    CenterEstimate c;
    try {
        c = spatial_median(x);
    } catch (const NotConverged& e) {
        c = {e.iterate(), CenterMethod::SpatialMedian, e.iterations(), e.residual(), {}};
    }
    return sscm(x, c);
}

/// Average of U(x_i − x_j) U(x_i − x_j)ᵀ over all unordered pairs i < j.
/// O(n² d²); identical pairs contribute zero.
inline ScatterEstimate kendall_tau(const DataMatrix& x) {
    x.validate();
    if (x.rows() < 2) throw InvalidInput("kendall_tau: needs at least two rows");
    const std::size_t n = x.rows(), d = x.cols();
    detail::OuterSum sum(d);
    Vector diff(d);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto ri = x.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto rj = x.row(j);
            double len2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                diff[k] = ri[k] - rj[k];
                len2 += diff[k] * diff[k];
            }
            if (len2 == 0.0) continue;
            sum.add(diff, 1.0 / len2);
        }
    }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return {sum.finish(1.0 / pairs), ScatterKind::KendallTau, std::nullopt};
}

/// Unbiased sample covariance about the coordinate mean.
inline ScatterEstimate pearson(const DataMatrix& x) {
    x.validate();
    if (x.rows() < 2) throw InvalidInput("pearson: needs at least two rows");
    auto mean = coordinate_mean(x);
    detail::OuterSum sum(x.cols());
    Vector diff(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) diff[j] = r[j] - mean.center[j];
        sum.add(diff);
    }
    return {sum.finish(1.0 / static_cast<double>(x.rows() - 1)), ScatterKind::Pearson, std::move(mean)};
}

// ---------------------------------------------------------------------------

struct PopulationEigen {
    Vector values;           // λ_j(S), same order as the input eigenvalues
    Vector standard_errors;  // Monte-Carlo standard error of each value
};

/// Monte-Carlo estimate of λ_j(S) = E[λ_j Y_j² / Σ_k λ_k Y_k²] with
/// Y ~ N(0, I). Each draw contributes a vector summing to one; the averages
/// are renormalized so the returned values sum to one.
inline PopulationEigen population_sscm_eigen(std::span<const double> sigma_eigenvalues,
                                             std::size_t mc_draws = 1000000, std::uint64_t seed = 0) {
    if (sigma_eigenvalues.empty()) throw InvalidInput("population_sscm_eigen: no eigenvalues");
    bool positive = false;
    for (double l : sigma_eigenvalues) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidInput("population_sscm_eigen: eigenvalues must be >= 0");
        positive = positive || l > 0.0;
    }
    if (!positive) throw InvalidInput("population_sscm_eigen: need a positive eigenvalue");
    if (mc_draws < 2) throw InvalidInput("population_sscm_eigen: need at least two draws");

    const std::size_t q = sigma_eigenvalues.size();
    CounterRng rng(substream_seed(seed, 0x5c));
    std::normal_distribution<double> normal;
    Vector sum(q, 0.0), sumsq(q, 0.0), term(q);
    for (std::size_t t = 0; t < mc_draws; ++t) {
        double den = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            const double y = normal(rng);
            term[j] = sigma_eigenvalues[j] * y * y;
            den += term[j];
        }
        for (std::size_t j = 0; j < q; ++j) {
            const double v = den > 0.0 ? term[j] / den : 0.0;
            sum[j] += v;
            sumsq[j] += v * v;
        }
    }
    const double m = static_cast<double>(mc_draws);
    PopulationEigen out{Vector(q), Vector(q)};
    double total = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        out.values[j] = sum[j] / m;
        total += out.values[j];
        const double var = std::max(0.0, (sumsq[j] - sum[j] * sum[j] / m) / (m - 1.0));
        out.standard_errors[j] = std::sqrt(var / m);
    }
    for (double& v : out.values) v /= total;
    return out;
}

// ---------------------------------------------------------------------------
// serialization: matrix as headerless CSV, metadata as a JSON sidecar

inline nlohmann::json to_json(const CenterEstimate& c) {
    return {{"method", to_string(c.method)}, {"center", c.center}, {"iterations", c.iterations}, {"residual", c.residual}};
}

inline CenterEstimate center_from_json(const nlohmann::json& j) {
    CenterEstimate c;
    const auto m = j.at("method").get<std::string>();
    c.method = m == "spatial_median" ? CenterMethod::SpatialMedian : m == "mean" ? CenterMethod::Mean : CenterMethod::Fixed;
    c.center = j.at("center").get<Vector>();
    c.iterations = j.value("iterations", std::size_t{0});
    c.residual = j.value("residual", 0.0);
    return c;
}

inline nlohmann::json scatter_sidecar(const ScatterEstimate& s) {
    nlohmann::json j{{"kind", to_string(s.kind)}, {"d", s.matrix.dim()}};
    j["center"] = s.center ? to_json(*s.center) : nlohmann::json(nullptr);
    return j;
}

inline void write_scatter(const ScatterEstimate& s, const std::string& csv_path, const std::string& json_path) {
    const std::size_t d = s.matrix.dim();
    write_csv_file(csv_path, DataMatrix(d, d, Vector(s.matrix.data().begin(), s.matrix.data().end())));
    std::ofstream out(json_path);
    if (!out) throw InvalidInput("cannot write '" + json_path + "'");
    out << scatter_sidecar(s).dump(2) << '\n';
}

inline ScatterEstimate read_scatter(const std::string& csv_path, const std::string& json_path) {
    const auto table = read_csv_file(csv_path);
    std::ifstream in(json_path);
    if (!in) throw ParseError("cannot open '" + json_path + "'");
    nlohmann::json j;
    try {
        in >> j;
        ScatterEstimate s;
        s.kind = scatter_kind_from_string(j.at("kind").get<std::string>());
        const std::size_t d = table.data.rows();
        if (table.data.cols() != d || j.at("d").get<std::size_t>() != d) throw ParseError("scatter CSV is not d×d");
        s.matrix = SymMatrix::from_dense(d, table.data.values());
        if (!j.at("center").is_null()) s.center = center_from_json(j.at("center"));
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scatter sidecar: ") + e.what());
    }
}

}  // namespace sspca
