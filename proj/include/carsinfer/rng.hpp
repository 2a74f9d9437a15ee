#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace carsinfer::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Named substream: all pipeline randomness flows from one seed through
/// independently hashed streams.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view name) {
    return std::mt19937_64(splitmix64(seed ^ fnv1a(name)));
}

/// Counter-based per-particle stream, independent of thread scheduling.
inline std::mt19937_64 particle_stream(std::uint64_t seed, std::uint64_t iteration,
                                       std::uint64_t particle) {
    std::uint64_t h = splitmix64(seed ^ fnv1a("smc"));
    h = splitmix64(h ^ (0x9e3779b97f4a7c15ULL * (iteration + 1)));
    h = splitmix64(h ^ (0xc2b2ae3d27d4eb4fULL * (particle + 1)));
    return std::mt19937_64(h);
}

} // namespace carsinfer::rng
