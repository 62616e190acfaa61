#pragma once

#include <cstdint>
#include <random>

namespace srb {

/// Counter-based stream derivation: each (seed, index) pair yields an
/// independent, reproducible generator, so ensemble results do not depend
/// on execution order or worker count.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(mix64(mix64(seed) ^ mix64(index + 0x51ed270b7a4ce1d5ull)));
}

} // namespace srb
