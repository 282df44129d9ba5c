#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace netoed {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream key from a base seed and a path of indices,
/// e.g. (seed, event index, replicate index). Order of evaluation never matters.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng(stream_key(seed, path));
}

/// Uniform double in [0, 1) from 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace netoed
