#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ptrain {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a parent seed and a path of counters,
/// e.g. derive_seed(root, {stream::step, t, m}). Order of the path matters.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(parent);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

/// Stream tags so that seeds drawn for different purposes never collide.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t step = 3;
inline constexpr std::uint64_t eval_corruption = 4;
inline constexpr std::uint64_t split = 5;
inline constexpr std::uint64_t data = 6;
inline constexpr std::uint64_t verify = 7;
}  // namespace stream

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace ptrain
