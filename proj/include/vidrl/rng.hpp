#pragma once

#include <cstdint>
#include <random>

namespace vidrl {

// splitmix64 finalizer; spreads low-entropy seeds over the full state space.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream seed derived from a master seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream));
}

// Uniform double in [0, 1) with 53 random bits. Standard distributions are
// implementation-defined; this stays bit-identical across toolchains.
inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

// Uniform index in [0, n); n must be positive.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(u01(rng) * static_cast<double>(n)) % n;
}

}  // namespace vidrl
