#pragma once
// Shared constants and the deterministic RNG used throughout.

#include <cmath>
#include <cstdint>
#include <random>

namespace gkpft {

inline constexpr double kSqrtPi     = 1.7724538509055160273;  // sqrt(pi)
inline constexpr double kHalfSqrtPi = kSqrtPi / 2.0;

// ---------------------------------------------------------------------- rng
//
// Every stochastic routine takes an explicit Rng&.  Monte-Carlo drivers give
// each trial its own stream, derived from (master_seed, trial_index) through
// splitmix64, so results are independent of worker count and replay exactly.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static Rng for_trial(std::uint64_t master_seed, std::uint64_t trial_index) {
    return Rng(splitmix64(master_seed + 0x9E3779B97F4A7C15ULL * (trial_index + 1)));
  }

  // Uniform in (0,1] / [0,1) from the top 53 bits of the engine output.
  double uniform_open() { return ((eng_() >> 11) + 1) * 0x1.0p-53; }
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  // Box-Muller, no second-value caching: one normal always costs exactly two
  // engine draws, which keeps draw counts (and so replay) easy to reason about.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  double normal(double sigma) { return sigma * normal(); }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gkpft
