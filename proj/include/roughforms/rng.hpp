#pragma once

#include <cstdint>
#include <random>

namespace roughforms {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based sub-seed: independent stream per (seed, index) pair.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index = 0) {
    return std::mt19937_64(sub_seed(seed, index));
}

}  // namespace roughforms
