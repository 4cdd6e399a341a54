#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace adavsr {

/// Engine keyed by a tuple of integers, e.g. (seed, step, slot). Every
/// random quantity in the library is drawn from one of these so results are
/// pure functions of their keys.
inline std::mt19937_64 keyed_rng(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq s(words.begin(), words.end());
  return std::mt19937_64(s);
}

/// Uniform double in [0, 1) with a platform-independent mapping.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n).
inline int uniform_int(std::mt19937_64& rng, int n) {
  return static_cast<int>(uniform01(rng) * n);
}

}  // namespace adavsr
