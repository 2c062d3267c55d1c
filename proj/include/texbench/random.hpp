#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace texbench {

/// Counter-based SplitMix64 generator.
///
/// The i-th output (i = 1, 2, ...) is mix64(seed + i * 0x9E3779B97F4A7C15),
/// where mix64 is the SplitMix64 finalizer. Every derived quantity below is
/// computed with integer arithmetic or a fixed float formula, so a given seed
/// reproduces the same stream on every platform. No std:: distributions are
/// used because their algorithms are implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t next() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept;

    /// Standard normal via Box-Muller (two uniforms per draw, no caching).
    double normal() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    /// Seed for an independent sub-stream identified by `stream`.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

/// Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
    shuffle(std::span<T>(items), rng);
}

/// `count` distinct indices from [0, n) in increasing order (partial shuffle).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    SplitMix64& rng);

} // namespace texbench
