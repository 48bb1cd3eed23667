#pragma once

#include <cstdint>
#include <random>

namespace tnet {

// splitmix64: stable seed mixer. Every derived RNG stream in the toolkit is
// seeded through this so that on-disk seeds reproduce runs exactly.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(base ^ (stream * 0x9e3779b97f4a7c15ULL)) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace tnet
