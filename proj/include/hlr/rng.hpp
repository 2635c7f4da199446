#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace hlr {

// Deterministic random source used by every generator in this library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard, and all transforms below are written out explicitly instead of
// going through std::*_distribution (those are implementation-defined and
// would break cross-platform reproducibility).
//
// Draw conventions, in stream order:
//   uniform01     one engine word; (x >> 11) * 2^-53, in [0, 1)
//   uniform       a + (b - a) * uniform01, one word
//   normal        Marsaglia polar method; consumes engine words in pairs,
//                 rejecting pairs outside the unit disc; the spare value is
//                 cached, so draws come in twos
//   uniform_int   one word reduced modulo n (bias < 2^-53 for n used here)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed_expand(seed)) {}

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal via the polar method (sqrt/log only, no trig).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_int(std::uint64_t n) { return next() % n; }

  // Fisher-Yates shuffle of the first `prefix` positions; used to draw a
  // uniform subset of that size. Swaps run left to right.
  void partial_shuffle(std::vector<int>& items, std::size_t prefix) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < prefix && i + 1 < n; ++i) {
      const std::size_t j = i + uniform_int(n - i);
      std::swap(items[i], items[j]);
    }
  }

  std::uint64_t next() {
    // mt19937_64 core, inlined via <random>.
    return state_();
  }

 private:
  static std::mt19937_64 seed_expand(std::uint64_t seed) {
    return std::mt19937_64(seed);
  }

  std::mt19937_64 state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hlr
