#pragma once

#include <cstdint>
#include <random>

namespace moe {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stable hash of an ordered tuple of 64-bit words.
constexpr std::uint64_t hash_seed(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}
constexpr std::uint64_t hash_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
    return hash_seed(hash_seed(a, b), c);
}

/// Independent stream for chunk `index` of a computation seeded by `seed`.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(hash_seed(seed, index, 0x5eedULL));
}

/// Uniform double on [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace moe
