// Seeded random streams. Every consumer gets its own engine derived from a
// master seed plus tags, so results never depend on scheduling order.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bodydisc {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
/// Stable hash of (seed, tags...). Used for per-round and per-test streams.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(seed, tags));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n), unbiased (Lemire's multiply-shift with rejection).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Stream tags, so derived seeds for different purposes never collide.
enum class Stream : std::uint64_t {
  Scenario = 0x5ce0,
  Mirror = 0x3177,
  Allocation = 0xa110,
  Environment = 0xe1,
  OtherAgents = 0xe2,
  Failure = 0xe3,
  Sensing = 0xe4,
  Inference = 0x1f,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace bodydisc
