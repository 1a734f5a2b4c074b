#pragma once

#include <cstdint>
#include <random>

namespace condep {

using Rng = std::mt19937_64;

// splitmix64 step; used to derive independent per-task seeds so that
// parallel repetitions never share a stream.
inline std::uint64_t seed_mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t task) {
  return seed_mix(base ^ seed_mix(task));
}

inline double uniform01(Rng& rng) {
  // strictly inside (0,1)
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

inline double normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

}  // namespace condep
