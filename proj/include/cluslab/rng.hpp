#pragma once

#include <cmath>
#include <cstdint>

// Counter-based deterministic random streams. Every draw is a pure function
// of (seed, stream, counter), so matrices can be filled in any order, from
// any thread, and still come out bit-identical.
//
// Generator: SplitMix64 finalizer chained over the inputs; normals via
// Box-Muller on two adjacent counters.

namespace cluslab::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// One 64-bit word for (seed, stream i, counter j).
inline std::uint64_t word(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    std::uint64_t s = mix64(seed);
    s = mix64(s ^ mix64(i));
    return mix64(s ^ mix64(j));
}

// Uniform on (0, 1]; never returns 0 so it is safe under log().
inline double unit(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    return unit(word(seed, i, j));
}

// Standard normal at logical position (i, j). Consumes counters 2j and 2j+1.
inline double normal(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    const double u1 = unit(word(seed, i, 2 * j));
    const double u2 = unit(word(seed, i, 2 * j + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Uniform integer in [0, bound) via the multiply-shift reduction.
inline std::uint64_t bounded(std::uint64_t seed, std::uint64_t i, std::uint64_t j,
                             std::uint64_t bound) {
    const std::uint64_t w = word(seed, i, j);
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(w) * bound) >> 64);
}

// Domain separation for the different sampling roles of one instance seed.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag));
}

inline constexpr std::uint64_t kTagLabels = 0x6C61626C73ull;
inline constexpr std::uint64_t kTagMeans = 0x6D65616E73ull;
inline constexpr std::uint64_t kTagNoise = 0x6E6F697365ull;

}  // namespace cluslab::rng
