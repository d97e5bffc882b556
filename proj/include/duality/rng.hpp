#pragma once

#include <cstdint>
#include <limits>

namespace duality {

/// SplitMix64 finalizer (Steele, Lea & Flood). Used both as the stream
/// generator and to derive independent sub-stream seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Deterministic random stream. Every pair of a run draws from its own stream
/// keyed by (seed, pair index), so results do not depend on thread count or
/// execution order.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit constexpr Stream(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t salt = 0) noexcept
        : state_(splitmix64(seed ^ splitmix64(index ^ splitmix64(salt + 0x632BE59BD9B4E019ULL)))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform integer in [0, n). Multiply-shift; bias is below 2^-53 * n.
    constexpr std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

private:
    std::uint64_t state_;
};

/// Salts separating the per-pair streams from run-level decisions.
namespace salt {
inline constexpr std::uint64_t pair = 1;
inline constexpr std::uint64_t destruction_subset = 2;
inline constexpr std::uint64_t replicate = 3;
} // namespace salt

} // namespace duality
