#pragma once

// Sparse initializer from the ℓ1-penalized Fantope program
//
//   max ⟨Ŝ, M⟩ − λ Σ_jk |M_jk|   s.t.  0 ⪯ M ⪯ I,  tr M = 1,
//
// solved by ADMM: X-step is the Euclidean projection onto the Fantope,
// Y-step is entrywise soft-thresholding, U is the scaled dual.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sspca/errors.hpp"
#include "sspca/numerics.hpp"
#include "sspca/truncate.hpp"

namespace sspca {

struct FantopeConfig {
    double lambda = 0.0;  // ℓ1 penalty
    double phi = 0.0;     // threshold applied to u₁(Y)
    double admm_rho = 1.0;
    double tol = 1e-6;
    std::size_t max_iter = 2000;

    void validate() const {
        if (!(lambda >= 0.0) || !(phi >= 0.0)) throw InvalidInput("FantopeConfig: lambda and phi must be >= 0");
        if (!(admm_rho > 0.0) || !(tol > 0.0)) throw InvalidInput("FantopeConfig: rho and tol must be > 0");
    }
};

struct FantopeSolution {
    SymMatrix Y;  // the Fantope-feasible iterate at exit
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::size_t iterations = 0;
    std::vector<double> objective_trace;
};

/// ⟨S, M⟩ − λ Σ|M_jk|
inline double fantope_objective(const SymMatrix& s, const SymMatrix& m, double lambda) {
    double inner = 0.0, l1 = 0.0;
    const auto a = s.data(), b = m.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        inner += a[i] * b[i];
        l1 += std::abs(b[i]);
    }
    return inner - lambda * l1;
}

/// Euclidean projection onto {0 ⪯ M ⪯ I, tr M = 1}: clip the eigenvalues to
/// [0,1] after a common shift θ chosen by bisection so they sum to one.
inline SymMatrix fantope_project(const SymMatrix& h) {
    const auto pairs = sym_eigen(h);
    auto clipped_sum = [&](double theta) {
        double s = 0.0;
        for (const auto& p : pairs) s += std::clamp(p.value - theta, 0.0, 1.0);
        return s;
    };
    double lo = pairs.back().value - 1.0, hi = pairs.front().value;
    while (hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (clipped_sum(mid) > 1.0 ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    SymMatrix out(h.dim());
    for (const auto& p : pairs) {
        const double g = std::clamp(p.value - theta, 0.0, 1.0);
        if (g > 0.0) out += g * SymMatrix::outer(p.vector);
    }
    return out;
}

inline SymMatrix soft_threshold(const SymMatrix& m, double t) {
    SymMatrix out(m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = i; j < m.dim(); ++j) {
            const double v = m(i, j);
            out.set(i, j, std::copysign(std::max(std::abs(v) - t, 0.0), v));
        }
    return out;
}

/// Throws NotConverged (iterate = row-major Y) when the residuals are still
/// above tol after max_iter iterations.
inline FantopeSolution fantope_solve(const SymMatrix& s_hat, const FantopeConfig& cfg) {
    cfg.validate();
    if (!s_hat.is_finite()) throw InvalidInput("fantope_solve: non-finite matrix");
    const std::size_t d = s_hat.dim();
    const double rho = cfg.admm_rho;
    SymMatrix scaled = (1.0 / rho) * s_hat;
    SymMatrix y(d), u(d), x(d);
    FantopeSolution sol;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        x = fantope_project(y - u + scaled);
        const SymMatrix y_old = y;
        y = soft_threshold(x + u, cfg.lambda / rho);
        u += x - y;
        sol.primal_residual = frobenius_norm(x - y);
        sol.dual_residual = rho * frobenius_norm(y - y_old);
        sol.objective_trace.push_back(fantope_objective(s_hat, x, cfg.lambda));
        sol.iterations = it;
        if (sol.primal_residual <= cfg.tol && sol.dual_residual <= cfg.tol) {
            sol.Y = std::move(x);
            return sol;
        }
    }
    throw NotConverged("fantope_solve: residuals above tol after " + std::to_string(cfg.max_iter) + " iterations",
                       Vector(x.data().begin(), x.data().end()),
                       std::max(sol.primal_residual, sol.dual_residual), cfg.max_iter);
}

/// v⁽⁰⁾ = TRC(u₁(Y), J_φ)/‖·‖₂ with J_φ = {j : |u₁(Y)_j| ≥ φ}.
inline Vector fantope_initializer(const SymMatrix& s_hat, const FantopeConfig& cfg) {
    const auto sol = fantope_solve(s_hat, cfg);
    const Vector u = sym_eigen(sol.Y).front().vector;
    IndexSet keep;
    for (std::size_t j = 0; j < u.size(); ++j)
        if (std::abs(u[j]) >= cfg.phi) keep.push_back(j);
    if (keep.empty()) throw EmptySupport("fantope_initializer: no entry of u1(Y) reaches phi");
    Vector w = trc(u, keep);
    normalize(w);
    return w;
}

}  // namespace sspca
