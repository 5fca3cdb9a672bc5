#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>

namespace camnet {

// Portable building blocks. The std:: distributions are implementation
// defined, so everything that feeds simulation output is derived here from
// std::mt19937_64 (fully specified) or from splitmix64.

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    return splitmix64(x);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

/// Stable seed for one (node, purpose) stream. Adding or removing other
/// nodes never changes the value for this pair.
inline constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view node_id,
                                           std::string_view purpose) noexcept {
    return hash_combine(hash_combine(mix64(master), fnv1a64(node_id)), fnv1a64(purpose));
}

/// Maps 64 random bits onto [0, 1) with 53-bit resolution.
inline constexpr double bits_to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Standard normal sample that is a pure function of `key` (Box-Muller).
inline double hashed_normal(std::uint64_t key) noexcept {
    std::uint64_t s = key;
    double u1 = bits_to_unit(splitmix64(s));
    const double u2 = bits_to_unit(splitmix64(s));
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform01() { return bits_to_unit(engine_()); }

    /// Uniform integer in [lo, hi], rejection-sampled (no modulo bias).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_());
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % span);
    }

    double normal() { return hashed_normal(engine_()); }

private:
    std::mt19937_64 engine_;
};

} // namespace camnet
