#pragma once

// Leading sparse eigenvector estimation: the truncated power method, the
// exact s-sparse program for small d, and deflation for several components.

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sspca/errors.hpp"
#include "sspca/fantope_init.hpp"
#include "sspca/numerics.hpp"
#include "sspca/truncate.hpp"

namespace sspca {

struct LeadingEigenvectorInit {};
struct FantopeStart {
    FantopeConfig config;
};
struct GivenInit {
    Vector vector;
};
using PcInit = std::variant<LeadingEigenvectorInit, FantopeStart, GivenInit>;

struct SparsePCConfig {
    std::size_t k = 1;
    double eps = 1e-6;
    std::size_t max_iter = 1000;
    PcInit init = LeadingEigenvectorInit{};

    void validate(std::size_t d) const {
        if (k < 1 || k > d) throw InvalidInput("SparsePCConfig: k must lie in [1, d]");
        if (!(eps > 0.0)) throw InvalidInput("SparsePCConfig: eps must be positive");
        if (max_iter < 1) throw InvalidInput("SparsePCConfig: max_iter must be positive");
    }
};

struct SparsePCResult {
    Vector vector;
    IndexSet support;
    double rayleigh = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
    std::vector<double> rayleigh_trace;  // vᵀSv after each iteration
};

struct SubspaceResult {
    std::vector<SparsePCResult> vectors;
    std::vector<SymMatrix> deflation_trace;  // the matrix each component was fitted on
};

inline Vector initial_vector(const SymMatrix& s, const PcInit& init) {
    if (std::holds_alternative<FantopeStart>(init)) return fantope_initializer(s, std::get<FantopeStart>(init).config);
    if (std::holds_alternative<GivenInit>(init)) {
        Vector v = std::get<GivenInit>(init).vector;
        if (v.size() != s.dim()) throw InvalidInput("initial vector has the wrong dimension");
        if (!all_finite(v) || normalize(v) == 0.0) throw InvalidInput("initial vector must be finite and nonzero");
        return v;
    }
    return sym_eigen(s).front().vector;
}

/// Truncated power iteration: W = S v; keep the k largest |W_i| when W has
/// more than k nonzeros; normalize; stop once ‖v_t − v_{t−1}‖₂ ≤ eps.
/// The returned vector carries the sign convention (first nonzero entry > 0).
inline SparsePCResult truncated_power(const SymMatrix& s, const SparsePCConfig& cfg) {
    cfg.validate(s.dim());
    if (!s.is_finite()) throw InvalidInput("truncated_power: non-finite matrix");
    Vector v = initial_vector(s, cfg.init);
    SparsePCResult res;
    res.converged = false;
    for (std::size_t t = 1; t <= cfg.max_iter; ++t) {
        Vector w = s * v;
        if (count_nonzero(w) > cfg.k) w = trc(w, top_k_indices(w, cfg.k));
        if (normalize(w) == 0.0)
            throw DegenerateIterate("truncated_power: iterate fell into the null space at iteration " + std::to_string(t), t);
        double diff2 = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) diff2 += (w[i] - v[i]) * (w[i] - v[i]);
        v = std::move(w);
        res.iterations = t;
        res.rayleigh_trace.push_back(s.quadratic_form(v));
        if (std::sqrt(diff2) <= cfg.eps) {
            res.converged = true;
            break;
        }
    }
    canonicalize_sign(v);
    res.rayleigh = s.quadratic_form(v);
    res.support = support_of(v);
    res.vector = std::move(v);
    return res;
}

inline constexpr std::size_t kEnumerationMaxDim = 25;

namespace detail {

// Calls f(support) for every size-s subset of {0..d-1} in lexicographic order.
template <class F>
void for_each_support(std::size_t d, std::size_t s, F&& f) {
    IndexSet idx(s);
    for (std::size_t i = 0; i < s; ++i) idx[i] = i;
    while (true) {
        f(std::as_const(idx));
        std::size_t i = s;
        while (i > 0 && idx[i - 1] == d - s + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// Eigenpair of largest |λ|; the positive end wins an exact tie.
inline EigenPair extreme_pair(const SymMatrix& m) {
    auto pairs = sym_eigen(m);
    return std::abs(pairs.back().value) > std::abs(pairs.front().value) ? pairs.back() : pairs.front();
}

}  // namespace detail

/// Exact maximizer of |vᵀSv| over unit vectors with at most s nonzeros, by
/// enumerating every size-s support. Ties go to the lexicographically first
/// support. Refuses d above kEnumerationMaxDim with TooLarge.
inline SparsePCResult combinatoric_sparse_pc(const SymMatrix& s, std::size_t sparsity) {
    const std::size_t d = s.dim();
    if (d > kEnumerationMaxDim)
        throw TooLarge("combinatoric_sparse_pc: d = " + std::to_string(d) + " exceeds the enumeration limit of " +
                       std::to_string(kEnumerationMaxDim));
    if (sparsity < 1 || sparsity > d) throw InvalidInput("combinatoric_sparse_pc: s must lie in [1, d]");
    if (!s.is_finite()) throw InvalidInput("combinatoric_sparse_pc: non-finite matrix");
    double best_abs = -1.0;
    EigenPair best;
    IndexSet best_support;
    detail::for_each_support(d, sparsity, [&](const IndexSet& idx) {
        auto p = detail::extreme_pair(s.principal_submatrix(idx));
        if (std::abs(p.value) > best_abs) {
            best_abs = std::abs(p.value);
            best = std::move(p);
            best_support = idx;
        }
    });
    Vector v(d, 0.0);
    for (std::size_t i = 0; i < best_support.size(); ++i) v[best_support[i]] = best.vector[i];
    canonicalize_sign(v);
    SparsePCResult res;
    res.rayleigh = s.quadratic_form(v);
    res.support = support_of(v);
    res.vector = std::move(v);
    return res;
}

/// (I − vvᵀ) S (I − vvᵀ)
inline SymMatrix deflate(const SymMatrix& s, std::span<const double> v) {
    if (v.size() != s.dim()) throw InvalidInput("deflate: dimension mismatch");
    if (std::abs(norm2(v) - 1.0) > 1e-8) throw InvalidInput("deflate: v must be a unit vector");
    const Vector w = s * v;
    const double c = dot(v, w);
    SymMatrix out(s.dim());
    for (std::size_t j = 0; j < s.dim(); ++j)
        for (std::size_t k = j; k < s.dim(); ++k)
            out.set(j, k, s(j, k) - v[j] * w[k] - w[j] * v[k] + c * v[j] * v[k]);
    return out;
}

/// Runs truncated_power once per config, deflating the matrix by each
/// estimate before fitting the next.
inline SubspaceResult top_m_sparse_pcs(const SymMatrix& s, const std::vector<SparsePCConfig>& configs) {
    if (configs.empty()) throw InvalidInput("top_m_sparse_pcs: need at least one config");
    SubspaceResult out;
    SymMatrix current = s;
    for (std::size_t r = 0; r < configs.size(); ++r) {
        out.deflation_trace.push_back(current);
        out.vectors.push_back(truncated_power(current, configs[r]));
        if (r + 1 < configs.size()) current = deflate(current, out.vectors.back().vector);
    }
    return out;
}

inline nlohmann::json to_json(const SparsePCResult& r) {
    return {{"vector", r.vector},         {"support", r.support},    {"rayleigh", r.rayleigh},
            {"iterations", r.iterations}, {"converged", r.converged}};
}

inline SparsePCResult sparse_pc_from_json(const nlohmann::json& j) {
    try {
        SparsePCResult r;
        r.vector = j.at("vector").get<Vector>();
        r.support = j.at("support").get<IndexSet>();
        r.rayleigh = j.at("rayleigh").get<double>();
        r.iterations = j.at("iterations").get<std::size_t>();
        r.converged = j.at("converged").get<bool>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sparse PC result: ") + e.what());
    }
}

}  // namespace sspca
