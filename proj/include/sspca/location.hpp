#pragma once

// Center estimates: the spatial (geometric) median and the coordinate mean.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sspca/data.hpp"
#include "sspca/errors.hpp"
#include "sspca/numerics.hpp"

namespace sspca {

enum class CenterMethod { SpatialMedian, Mean, Fixed };

inline std::string to_string(CenterMethod m) {
    switch (m) {
        case CenterMethod::SpatialMedian: return "spatial_median";
        case CenterMethod::Mean: return "mean";
        default: return "fixed";
    }
}

struct CenterEstimate {
    Vector center;
    CenterMethod method = CenterMethod::Fixed;
    std::size_t iterations = 0;
    double residual = 0.0;  // norm of the minimal subgradient at exit
    std::vector<double> objective_trace;  // filled only when requested
};

struct SpatialMedianOptions {
    double tol = 1e-8;
    std::size_t max_iter = 500;
    bool record_objective = false;
};

inline CenterEstimate fixed_center(Vector c) { return {std::move(c), CenterMethod::Fixed, 0, 0.0, {}}; }

inline CenterEstimate coordinate_mean(const DataMatrix& x) {
    x.validate();
    Vector mean(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(x.rows());
    return {std::move(mean), CenterMethod::Mean, 0, 0.0, {}};
}

inline Vector coordinate_median(const DataMatrix& x) {
    Vector med(x.cols());
    Vector col(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, j);
        const std::size_t mid = col.size() / 2;
        std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid), col.end());
        double m = col[mid];
        if (col.size() % 2 == 0) m = 0.5 * (m + *std::max_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid)));
        med[j] = m;
    }
    return med;
}

/// Σ_i ‖x_i − mu‖₂
inline double spatial_median_objective(const DataMatrix& x, std::span<const double> mu) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double r2 = 0.0;
        const auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r2 += (r[j] - mu[j]) * (r[j] - mu[j]);
        f += std::sqrt(r2);
    }
    return f;
}

namespace detail {

struct WeightedPoints {
    DataMatrix points;
    Vector weights;
};

// Collapses identical rows into one point carrying their multiplicity.
inline WeightedPoints merge_duplicate_rows(const DataMatrix& x) {
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        const auto ra = x.row(a), rb = x.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<std::size_t> unique;
    Vector weights;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k > 0 && !less(order[k - 1], order[k])) {
            weights.back() += 1.0;
            continue;
        }
        unique.push_back(order[k]);
        weights.push_back(1.0);
    }
    return {x.select_rows(unique), std::move(weights)};
}

}  // namespace detail

/// Spatial median argmin_μ Σ‖x_i − μ‖₂ by the Weiszfeld iteration with the
/// Vardi–Zhang step when the iterate sits on a data point.
///
/// Starts at the coordinate-wise median; duplicate rows are merged into
/// weighted points first. Stops when the minimal subgradient norm
/// (‖Σ_{x_i≠μ} U(x_i − μ)‖ minus the weight sitting at μ) is ≤ tol·n.
/// Throws NotConverged with the best iterate after max_iter iterations.
inline CenterEstimate spatial_median(const DataMatrix& x, const SpatialMedianOptions& opt = {}) {
    x.validate();
    if (!(opt.tol > 0.0)) throw InvalidInput("spatial_median: tol must be positive");
    const std::size_t d = x.cols();
    const double n = static_cast<double>(x.rows());
    const auto merged = detail::merge_duplicate_rows(x);
    const DataMatrix& pts = merged.points;
    const Vector& w = merged.weights;

    CenterEstimate est;
    est.method = CenterMethod::SpatialMedian;
    if (pts.rows() == 1) {
        const auto r = pts.row(0);
        est.center.assign(r.begin(), r.end());
        if (opt.record_objective) est.objective_trace.push_back(0.0);
        return est;
    }

    Vector y = coordinate_median(x);
    Vector best = y;
    double best_obj = std::numeric_limits<double>::infinity();
    Vector grad(d), numer(d);
    constexpr double kCoincide = 1e-12;

    for (std::size_t it = 0;; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(numer.begin(), numer.end(), 0.0);
        double denom = 0.0, eta = 0.0, obj = 0.0;
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            const auto p = pts.row(i);
            double r2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) r2 += (p[j] - y[j]) * (p[j] - y[j]);
            const double r = std::sqrt(r2);
            obj += w[i] * r;
            if (r < kCoincide) {
                eta += w[i];
                continue;
            }
            const double wr = w[i] / r;
            for (std::size_t j = 0; j < d; ++j) {
                grad[j] += wr * (p[j] - y[j]);
                numer[j] += wr * p[j];
            }
            denom += wr;
        }
        if (opt.record_objective) est.objective_trace.push_back(obj);
        if (obj < best_obj) {
            best_obj = obj;
            best = y;
        }
        const double gnorm = norm2(grad);
        const double residual = std::max(0.0, gnorm - eta);
        if (residual <= opt.tol * n || denom == 0.0) {
            est.center = std::move(y);
            est.iterations = it;
            est.residual = residual;
            return est;
        }
        if (it == opt.max_iter)
            throw NotConverged("spatial_median: no convergence after " + std::to_string(opt.max_iter) + " iterations",
                               best, residual, it);

        // Weiszfeld map over the points not at y, then the Vardi–Zhang blend.
        for (std::size_t j = 0; j < d; ++j) numer[j] /= denom;
        if (eta > 0.0) {
            const double ratio = eta / gnorm;
            for (std::size_t j = 0; j < d; ++j) y[j] = (1.0 - ratio) * numer[j] + ratio * y[j];
        } else {
            y = numer;
        }
    }
}

}  // namespace sspca
