#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace sspca {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Key of substream `index` under `base_seed`. Used for per-replication and
/// per-purpose streams so that results do not depend on scheduling order.
constexpr std::uint64_t substream_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return mix64(base_seed ^ mix64(index ^ 0x6a09e667f3bcc909ULL));
}

/// Counter-based generator: the i-th output is mix64(key + i·γ). Satisfies
/// UniformRandomBitGenerator, so it plugs into <random> distributions.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++);
    }

    /// Generator for an independent child stream.
    constexpr CounterRng split(std::uint64_t index) const noexcept {
        return CounterRng(substream_seed(key_, index));
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection, so it is exactly uniform
    /// and identical on every platform.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t r;
        do r = (*this)();
        while (r >= limit);
        return r % bound;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Fisher–Yates permutation of 0..n-1.
inline std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    return p;
}

}  // namespace sspca
