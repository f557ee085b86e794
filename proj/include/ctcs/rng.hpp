#pragma once

#include <cstdint>
#include <random>

namespace ctcs {

// Derives independent substream seeds from one master seed (splitmix64 mix).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform in [0, 1). Scales raw engine output so results do not depend on
// the standard library's distribution implementations.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

inline std::size_t uniform_index(std::mt19937_64& gen, std::size_t n) {
  const auto idx = static_cast<std::size_t>(uniform01(gen) * static_cast<double>(n));
  return idx < n ? idx : n - 1;
}

}  // namespace ctcs
