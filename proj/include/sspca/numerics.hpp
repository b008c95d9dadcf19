#pragma once

// Dense symmetric-matrix kernel: storage, eigendecomposition, power
// iteration and the matrix norms used throughout the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sspca/errors.hpp"

namespace sspca {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// vector helpers

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline std::size_t count_nonzero(std::span<const double> a) {
    return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](double x) { return x != 0.0; }));
}

inline bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

/// Scales v to unit Euclidean norm in place. Returns the original norm.
inline double normalize(Vector& v) {
    const double n = norm2(v);
    if (n > 0.0)
        for (double& x : v) x /= n;
    return n;
}

inline Vector unit_vector(std::size_t d, std::size_t index) {
    Vector e(d, 0.0);
    e.at(index) = 1.0;
    return e;
}

/// Entries smaller than this (in absolute value) are ignored when the sign
/// convention looks for the "first nonzero" entry of a unit vector.
inline constexpr double kSignTolerance = 1e-10;

/// Flips v so its first entry with |v_i| > kSignTolerance·‖v‖ is positive.
inline void canonicalize_sign(Vector& v) {
    const double scale = std::max(norm2(v), std::numeric_limits<double>::min());
    for (double x : v) {
        if (std::abs(x) > kSignTolerance * scale) {
            if (x < 0.0)
                for (double& y : v) y = -y;
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// SymMatrix

/// Dense d×d symmetric matrix. Both triangles are stored and every write
/// goes to (i,j) and (j,i), so the two triangles are always bit-identical.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(std::size_t dim, double fill = 0.0) : dim_(dim), a_(dim * dim, fill) {
        if (dim == 0) throw InvalidInput("SymMatrix dimension must be >= 1");
    }

    /// Builds from row-major d×d data. Asymmetric input is symmetrized as (A+Aᵀ)/2.
    static SymMatrix from_dense(std::size_t dim, std::span<const double> rowmajor) {
        if (rowmajor.size() != dim * dim) throw InvalidInput("SymMatrix: data size is not d*d");
        SymMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j)
                m.set(i, j, i == j ? rowmajor[i * dim + i]
                                   : 0.5 * (rowmajor[i * dim + j] + rowmajor[j * dim + i]));
        return m;
    }

    static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t d = rows.size();
        Vector flat;
        flat.reserve(d * d);
        for (const auto& r : rows) {
            if (r.size() != d) throw InvalidInput("SymMatrix: rows must form a square matrix");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return from_dense(d, flat);
    }

    static SymMatrix identity(std::size_t dim) { return diagonal(Vector(dim, 1.0)); }

    static SymMatrix diagonal(std::span<const double> diag) {
        SymMatrix m(diag.size());
        for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
        return m;
    }

    /// u uᵀ
    static SymMatrix outer(std::span<const double> u) {
        SymMatrix m(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = i; j < u.size(); ++j) m.set(i, j, u[i] * u[j]);
        return m;
    }

    std::size_t dim() const noexcept { return dim_; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * dim_ + j]; }

    void set(std::size_t i, std::size_t j, double v) noexcept {
        a_[i * dim_ + j] = v;
        a_[j * dim_ + i] = v;
    }

    std::span<const double> row(std::size_t i) const noexcept {
        return {a_.data() + i * dim_, dim_};
    }

    /// Row-major copy of the full matrix.
    std::span<const double> data() const noexcept { return a_; }

    double trace() const noexcept {
        double t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    bool is_finite() const { return all_finite(a_); }

    Vector operator*(std::span<const double> v) const {
        if (v.size() != dim_) throw InvalidInput("SymMatrix * vector: dimension mismatch");
        Vector out(dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i) out[i] = dot(row(i), v);
        return out;
    }

    /// vᵀ M v
    double quadratic_form(std::span<const double> v) const { return dot(v, (*this) * v); }

    SymMatrix principal_submatrix(std::span<const std::size_t> idx) const {
        SymMatrix m(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = i; j < idx.size(); ++j) m.set(i, j, (*this)(idx[i], idx[j]));
        return m;
    }

    SymMatrix& operator*=(double c) noexcept {
        for (double& x : a_) x *= c;
        return *this;
    }
    SymMatrix& operator+=(const SymMatrix& o) {
        if (o.dim_ != dim_) throw InvalidInput("SymMatrix +=: dimension mismatch");
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }
    SymMatrix& operator-=(const SymMatrix& o) {
        if (o.dim_ != dim_) throw InvalidInput("SymMatrix -=: dimension mismatch");
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
        return *this;
    }
    friend SymMatrix operator*(double c, SymMatrix m) { return m *= c; }
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

private:
    std::size_t dim_ = 0;
    Vector a_;
};

// ---------------------------------------------------------------------------
// norms

inline double frobenius_norm(const SymMatrix& m) { return norm2(m.data()); }

inline double max_norm(const SymMatrix& m) {
    double r = 0.0;
    for (double x : m.data()) r = std::max(r, std::abs(x));
    return r;
}

// ---------------------------------------------------------------------------
// eigendecomposition

struct EigenPair {
    double value = 0.0;
    Vector vector;
};

namespace detail {

// Column-major scratch of eigenvectors: vecs[i*d + j] is entry i of vector j.
struct RawEigen {
    Vector values;
    Vector vecs;
};

inline RawEigen jacobi_eigen(const SymMatrix& m) {
    const std::size_t d = m.dim();
    Vector a(m.data().begin(), m.data().end());
    Vector v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
    auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * d + j]; };
    auto V = [&](std::size_t i, std::size_t j) -> double& { return v[i * d + j]; };

    const double fro2 = dot(a, a);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += A(p, q) * A(p, q);
        if (off <= 1e-32 * fro2 || off == 0.0) break;

        bool rotated = false;
        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = A(p, q);
                if (std::abs(apq) <= 1e-18 * std::sqrt(std::abs(A(p, p) * A(q, q))) ||
                    std::abs(apq) < std::numeric_limits<double>::min())
                    continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150)
                    t = 0.5 / theta;
                else
                    t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                A(p, q) = 0.0;
                A(q, p) = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }
    RawEigen out;
    out.values.resize(d);
    for (std::size_t i = 0; i < d; ++i) out.values[i] = A(i, i);
    out.vecs = std::move(v);
    return out;
}

// Householder reduction to tridiagonal form followed by implicit-shift QL
// (the classic EISPACK tred2/tql2 pair).
inline RawEigen tridiagonal_ql_eigen(const SymMatrix& m) {
    const std::size_t n = m.dim();
    Vector vstore(m.data().begin(), m.data().end());
    auto V = [&](std::size_t i, std::size_t j) -> double& { return vstore[i * n + j]; };
    Vector d(n), e(n, 0.0);

    // tred2
    for (std::size_t j = 0; j < n; ++j) d[j] = V(n - 1, j);
    for (std::size_t i = n - 1; i > 0; --i) {
        double scale = 0.0, h = 0.0;
        for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j) {
                d[j] = V(i - 1, j);
                V(i, j) = 0.0;
                V(j, i) = 0.0;
            }
        } else {
            for (std::size_t k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0) g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                V(j, i) = f;
                g = e[j] + V(j, j) * f;
                for (std::size_t k = j + 1; k < i; ++k) {
                    g += V(k, j) * d[k];
                    e[k] += V(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k < i; ++k) V(k, j) -= (f * e[k] + g * d[k]);
                d[j] = V(i - 1, j);
                V(i, j) = 0.0;
            }
        }
        d[i] = h;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        V(n - 1, i) = V(i, i);
        V(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (std::size_t k = 0; k <= i; ++k) d[k] = V(k, i + 1) / h;
            for (std::size_t j = 0; j <= i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k) g += V(k, i + 1) * V(k, j);
                for (std::size_t k = 0; k <= i; ++k) V(k, j) -= g * d[k];
            }
        }
        for (std::size_t k = 0; k <= i; ++k) V(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = V(n - 1, j);
        V(n - 1, j) = 0.0;
    }
    V(n - 1, n - 1) = 1.0;
    e[0] = 0.0;

    // tql2
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    double f = 0.0, tst1 = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t mm = l;
        while (mm < n) {
            if (std::abs(e[mm]) <= eps * tst1) break;
            ++mm;
        }
        if (mm > l) {
            int iter = 0;
            do {
                if (++iter > 200) break;
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
                f += h;
                p = d[mm];
                double c = 1.0, c2 = c, c3 = c;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (std::size_t ii = mm; ii-- > l;) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[ii];
                    h = c * p;
                    r = std::hypot(p, e[ii]);
                    e[ii + 1] = s * r;
                    s = e[ii] / r;
                    c = p / r;
                    p = c * d[ii] - s * g;
                    d[ii + 1] = h + s * (c * g + s * d[ii]);
                    for (std::size_t k = 0; k < n; ++k) {
                        h = V(k, ii + 1);
                        V(k, ii + 1) = s * V(k, ii) + c * h;
                        V(k, ii) = c * V(k, ii) - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
    return {std::move(d), std::move(vstore)};
}

}  // namespace detail

/// Size at or below which sym_eigen uses cyclic Jacobi rather than
/// tridiagonalization + QL.
inline constexpr std::size_t kJacobiMaxDim = 64;

/// Full eigendecomposition, pairs sorted by descending value.
///
/// Each vector is unit norm with its first nonzero entry positive. Within a
/// group of (numerically) equal eigenvalues the vectors are ordered
/// lexicographically descending, which makes degenerate spectra deterministic.
inline std::vector<EigenPair> sym_eigen(const SymMatrix& m) {
    if (!m.is_finite()) throw InvalidInput("sym_eigen: matrix has non-finite entries");
    const std::size_t d = m.dim();
    detail::RawEigen raw = d <= kJacobiMaxDim ? detail::jacobi_eigen(m) : detail::tridiagonal_ql_eigen(m);

    std::vector<EigenPair> pairs(d);
    for (std::size_t j = 0; j < d; ++j) {
        pairs[j].value = raw.values[j];
        pairs[j].vector.resize(d);
        for (std::size_t i = 0; i < d; ++i) pairs[j].vector[i] = raw.vecs[i * d + j];
        normalize(pairs[j].vector);
        canonicalize_sign(pairs[j].vector);
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const EigenPair& a, const EigenPair& b) { return a.value > b.value; });

    double scale = 0.0;
    for (const auto& p : pairs) scale = std::max(scale, std::abs(p.value));
    const double tie = 1e-12 * scale;
    for (std::size_t begin = 0; begin < d;) {
        std::size_t end = begin + 1;
        while (end < d && pairs[end - 1].value - pairs[end].value <= tie) ++end;
        if (end - begin > 1)
            std::sort(pairs.begin() + static_cast<std::ptrdiff_t>(begin),
                      pairs.begin() + static_cast<std::ptrdiff_t>(end),
                      [](const EigenPair& a, const EigenPair& b) { return a.vector > b.vector; });
        begin = end;
    }
    return pairs;
}

inline Vector eigenvalues(const SymMatrix& m) {
    Vector out;
    for (auto& p : sym_eigen(m)) out.push_back(p.value);
    return out;
}

/// Largest |eigenvalue|.
inline double spectral_norm(const SymMatrix& m) {
    const auto pairs = sym_eigen(m);
    return std::max(std::abs(pairs.front().value), std::abs(pairs.back().value));
}

/// Dominant eigenpair by power iteration from the normalized all-ones vector.
///
/// If the start vector is annihilated by M (it lies in a subspace orthogonal
/// to everything M sees) the iteration restarts once from a fixed seeded
/// Gaussian vector. Convergence is ‖v_t − v_{t−1}‖₂ ≤ tol after sign
/// canonicalization. Throws NotConverged carrying the last iterate.
inline EigenPair power_leading(const SymMatrix& m, double tol = 1e-12, std::size_t max_iter = 100000) {
    if (!(tol > 0.0)) throw InvalidInput("power_leading: tol must be positive");
    if (!m.is_finite()) throw InvalidInput("power_leading: matrix has non-finite entries");
    const std::size_t d = m.dim();
    const double fro = frobenius_norm(m);
    Vector v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    if (fro == 0.0) return {0.0, v};

    bool restarted = false;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Vector w = m * v;
        if (norm2(w) <= 1e-14 * fro) {
            if (restarted) return {0.0, v};
            std::mt19937_64 gen(0x5eed5eedULL);
            std::normal_distribution<double> z;
            for (double& x : v) x = z(gen);
            normalize(v);
            canonicalize_sign(v);
            restarted = true;
            continue;
        }
        normalize(w);
        canonicalize_sign(w);
        double diff = 0.0;
        for (std::size_t i = 0; i < d; ++i) diff += (w[i] - v[i]) * (w[i] - v[i]);
        v = std::move(w);
        if (std::sqrt(diff) <= tol) return {m.quadratic_form(v), v};
    }
    throw NotConverged("power_leading: no convergence after " + std::to_string(max_iter) + " iterations",
                       v, m.quadratic_form(v), max_iter);
}

}  // namespace sspca
