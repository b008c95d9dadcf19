#pragma once

// Evaluation quantities: eigenvector and subspace distances, restricted
// spectral norm, effective rank and regression leverage, plus a long-format
// CSV record stream.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sspca/data.hpp"
#include "sspca/errors.hpp"
#include "sspca/numerics.hpp"
#include "sspca/sparse_pca.hpp"

namespace sspca {

inline constexpr double kUnitTolerance = 1e-8;

/// √(1 − (v1ᵀv2)²) for unit vectors. Computed from the component of v1
/// orthogonal to v2 so that nearly parallel inputs keep full precision.
inline double sin_angle(std::span<const double> v1, std::span<const double> v2) {
    if (v1.size() != v2.size()) throw InvalidInput("sin_angle: dimension mismatch");
    if (std::abs(norm2(v1) - 1.0) > kUnitTolerance || std::abs(norm2(v2) - 1.0) > kUnitTolerance)
        throw InvalidInput("sin_angle: inputs must be unit vectors");
    const double c = dot(v1, v2);
    double r2 = 0.0;
    for (std::size_t i = 0; i < v1.size(); ++i) {
        const double e = v1[i] - c * v2[i];
        r2 += e * e;
    }
    const double via_residual = std::sqrt(r2);
    // The residual form loses accuracy near orthogonality; switch over there.
    const double s = std::abs(c) < 0.5 ? std::sqrt(std::max(0.0, 1.0 - c * c)) : via_residual;
    return std::clamp(s, 0.0, 1.0);
}

namespace detail {

inline SymMatrix projector(const std::vector<Vector>& basis, std::size_t d) {
    for (std::size_t a = 0; a < basis.size(); ++a) {
        if (basis[a].size() != d) throw InvalidInput("subspace_distance: columns must share the dimension");
        for (std::size_t b = a; b < basis.size(); ++b) {
            const double g = dot(basis[a], basis[b]);
            if (std::abs(g - (a == b ? 1.0 : 0.0)) > kUnitTolerance)
                throw InvalidInput("subspace_distance: columns must be orthonormal");
        }
    }
    SymMatrix p(d);
    for (const auto& u : basis) p += SymMatrix::outer(u);
    return p;
}

}  // namespace detail

/// ‖U1U1ᵀ − U2U2ᵀ‖_F for bases given as lists of orthonormal columns.
inline double subspace_distance(const std::vector<Vector>& u1, const std::vector<Vector>& u2) {
    if (u1.empty() || u1.size() != u2.size()) throw InvalidInput("subspace_distance: need two bases with m ≥ 1 columns");
    const std::size_t d = u1.front().size();
    return frobenius_norm(detail::projector(u1, d) - detail::projector(u2, d));
}

/// max |vᵀMv| over unit vectors with at most s nonzeros, by enumeration.
inline double restricted_spectral_norm(const SymMatrix& m, std::size_t s) {
    return std::abs(combinatoric_sparse_pc(m, s).rayleigh);
}

inline double effective_rank(const SymMatrix& s) {
    const double norm = spectral_norm(s);
    if (norm == 0.0) throw InvalidInput("effective_rank: zero matrix");
    return s.trace() / norm;
}

/// Hat-matrix diagonal of the regression of pc1 on pc2 with an intercept:
/// h_ii = 1/n + (x_i − x̄)² / Σ_j (x_j − x̄)², where x = pc2. Only x enters
/// the formula; pc1 fixes n and is checked for agreement.
inline Vector leverage_influence(std::span<const double> pc1_scores, std::span<const double> pc2_scores) {
    const std::size_t n = pc2_scores.size();
    if (pc1_scores.size() != n) throw InvalidInput("leverage_influence: score vectors differ in length");
    if (n < 2) throw InvalidInput("leverage_influence: needs at least two observations");
    if (!all_finite(pc2_scores) || !all_finite(pc1_scores)) throw InvalidInput("leverage_influence: non-finite scores");
    double mean = 0.0;
    for (double x : pc2_scores) mean += x;
    mean /= static_cast<double>(n);
    double sxx = 0.0;
    for (double x : pc2_scores) sxx += (x - mean) * (x - mean);
    if (sxx == 0.0) throw InvalidInput("leverage_influence: regressor is constant");
    Vector h(n);
    for (std::size_t i = 0; i < n; ++i)
        h[i] = 1.0 / static_cast<double>(n) + (pc2_scores[i] - mean) * (pc2_scores[i] - mean) / sxx;
    return h;
}

/// Indices with h_ii strictly above threshold.
inline std::vector<std::size_t> flag_leverage(std::span<const double> h, double threshold = 0.05) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] > threshold) out.push_back(i);
    return out;
}

// ---------------------------------------------------------------------------
// long-format records

/// Tag columns of the record CSV, in output order.
inline const std::vector<std::string>& metric_tag_columns() {
    static const std::vector<std::string> cols{"scenario", "method", "distribution", "n", "d", "s", "k",
                                               "component", "replication", "seed"};
    return cols;
}

struct MetricRecord {
    std::string name;
    double value = 0.0;
    std::map<std::string, std::string> context;

    friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

namespace detail {

inline void check_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") != std::string::npos)
        throw InvalidInput("metric CSV: cell '" + s + "' contains a reserved character");
}

}  // namespace detail

inline void write_metric_header(std::ostream& out) {
    out << "name,value";
    for (const auto& c : metric_tag_columns()) out << ',' << c;
    out << '\n';
}

/// One line per record; unknown tags are rejected, missing tags are blank.
inline void write_metric_record(std::ostream& out, const MetricRecord& r) {
    if (!std::isfinite(r.value)) throw InvalidInput("metric record '" + r.name + "' has a non-finite value");
    for (const auto& [key, v] : r.context) {
        const auto& cols = metric_tag_columns();
        if (std::find(cols.begin(), cols.end(), key) == cols.end())
            throw InvalidInput("metric record: unknown tag '" + key + "'");
        detail::check_cell(v);
    }
    detail::check_cell(r.name);
    out << r.name << ',' << format_double(r.value);
    for (const auto& c : metric_tag_columns()) {
        const auto it = r.context.find(c);
        out << ',' << (it == r.context.end() ? std::string() : it->second);
    }
    out << '\n';
}

inline void write_metric_csv(std::ostream& out, const std::vector<MetricRecord>& records) {
    write_metric_header(out);
    for (const auto& r : records) write_metric_record(out, r);
}

inline std::vector<MetricRecord> read_metric_csv(std::istream& in) {
    std::vector<MetricRecord> out;
    std::string line;
    std::size_t lineno = 0;
    const auto& cols = metric_tag_columns();
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != cols.size() + 2)
            throw ParseError("metric CSV: expected " + std::to_string(cols.size() + 2) + " cells", lineno);
        if (lineno == 1 && cells[0] == "name") {
            for (std::size_t c = 0; c < cols.size(); ++c)
                if (cells[c + 2] != cols[c]) throw ParseError("metric CSV: unexpected column '" + cells[c + 2] + "'", 1, c + 3);
            continue;
        }
        MetricRecord r;
        r.name = cells[0];
        const auto& v = cells[1];
        const auto res = std::from_chars(v.data(), v.data() + v.size(), r.value);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ParseError("metric CSV: non-numeric value '" + v + "'", lineno, 2);
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (!cells[c + 2].empty()) r.context[cols[c]] = cells[c + 2];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace sspca
