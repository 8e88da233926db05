#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace hipseg {

using Rng = std::mt19937_64;

// Deterministic child seed from a parent seed and a path of integers
// (epoch, worker, volume index, ...). splitmix64 mixing keeps nearby inputs apart.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (std::uint64_t p : path) h = mix(h ^ mix(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(seed, path));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double mean, double sigma) {
  return std::normal_distribution<double>(mean, sigma)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace hipseg
