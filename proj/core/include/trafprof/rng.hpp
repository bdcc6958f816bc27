#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trafprof {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a named random substream, e.g. substream_seed(seed, "forest/tree/17").
/// Components that draw from distinct names never share a sequence.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) noexcept {
    return splitmix64(seed ^ fnv1a64(name));
}

inline Rng make_rng(std::uint64_t seed, std::string_view name) {
    return Rng{substream_seed(seed, name)};
}

}  // namespace trafprof
