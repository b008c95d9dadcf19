#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "sspca/errors.hpp"
#include "sspca/numerics.hpp"

namespace sspca {

using IndexSet = std::vector<std::size_t>;

/// TRC(v, J): keeps v_i for i ∈ J and zeroes the rest.
inline Vector trc(std::span<const double> v, std::span<const std::size_t> keep) {
    Vector out(v.size(), 0.0);
    for (std::size_t i : keep) {
        if (i >= v.size()) throw InvalidInput("trc: index out of range");
        out[i] = v[i];
    }
    return out;
}

/// Indices of the k entries of largest magnitude, ties broken toward the
/// lower index; returned in increasing order.
inline IndexSet top_k_indices(std::span<const double> v, std::size_t k) {
    IndexSet idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, v.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double fa = std::abs(v[a]), fb = std::abs(v[b]);
                          return fa > fb || (fa == fb && a < b);
                      });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline IndexSet support_of(std::span<const double> v) {
    IndexSet s;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] != 0.0) s.push_back(i);
    return s;
}

}  // namespace sspca
