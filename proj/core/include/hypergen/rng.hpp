#pragma once

#include <cstdint>
#include <random>

namespace hypergen {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for sub-task `index` of a run seeded with `seed`.
/// Streams are a pure function of (seed, index), so work split across
/// threads or chunks draws the same numbers regardless of schedule.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace hypergen
