#pragma once

// Seeding helpers. Every stochastic component takes an explicit 64-bit seed and
// derives substreams through splitmix64 so runs are reproducible bit-for-bit
// from (seed, stream id) regardless of call order elsewhere.

#include <cmath>
#include <cstdint>
#include <random>

namespace setrl {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x51ed270b7a53c4bbULL));
}

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream = 0) {
  return std::mt19937_64(derive_seed(seed, stream));
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {  // inclusive range
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

// Own Box-Muller so Gaussian draws do not depend on libstdc++'s
// normal_distribution state machine (reproducibility across toolchains).
inline double gauss(std::mt19937_64& g) {
  double u1 = 0.0;
  do {
    u1 = std::uniform_real_distribution<double>(0.0, 1.0)(g);
  } while (u1 <= 1e-300);
  const double u2 = std::uniform_real_distribution<double>(0.0, 1.0)(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Sample an index from a discrete distribution given by probs[0..n).
inline int sample_categorical(std::mt19937_64& g, const double* probs, int n) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(g);
  double c = 0.0;
  for (int i = 0; i < n; ++i) {
    c += probs[i];
    if (u < c) return i;
  }
  return n - 1;
}

}  // namespace setrl
