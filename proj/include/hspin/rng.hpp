#pragma once

// Deterministic random-number helpers shared by the sampling code.  All
// variate generation is written out explicitly (no std distributions) so that
// seeded runs are reproducible bit-for-bit: the standard library does not pin
// the algorithm behind std::normal_distribution or
// std::uniform_real_distribution.

#include <cmath>
#include <cstdint>
#include <random>

namespace hspin {

// SplitMix64 scrambler; used to derive independent sub-stream seeds from a
// master seed (chain index, sample index) without correlated low bits.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Mersenne-Twister engine with explicit uniform and normal variate recipes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

  // Standard normal via the Marsaglia polar method (pairs are cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = symmetric();
      v = symmetric();
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hspin
