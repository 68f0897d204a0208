#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mammo {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; used to derive independent substream seeds.
constexpr std::uint64_t mixSeed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the substream identified by `tags` under `base`.
constexpr std::uint64_t deriveSeed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = mixSeed(base);
    for (auto t : tags) s = mixSeed(s ^ mixSeed(t + 0x632be59bd9b4e019ULL));
    return s;
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace mammo
