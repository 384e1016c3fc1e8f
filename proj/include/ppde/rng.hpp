#pragma once

#include <cstdint>
#include <random>

namespace ppde {

// Seed splitting: child k of a root seed is splitmix64(root ^ golden*(k+1)).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t root, std::uint64_t k) {
    return splitmix64(root ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::uint64_t stream) {
    return Rng(child_seed(root, stream));
}

}  // namespace ppde
