// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace skeletree {

// Deterministic random source. The engine is std::mt19937_64, which the
// standard pins bit-for-bit; the distributions are written out explicitly
// because the standard library's distribution objects are not
// implementation-stable. Same seed, same call sequence => same values on
// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    const double u = uniform();
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(u * span);
    return v > hi ? hi : v;
  }

  // Box-Muller without a cached spare; two draws per call.
  double normal(double mean, double sigma) {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * M_PI * u2);
  }

  // Normal truncated to +-max_sigmas by redraw.
  double truncated_normal(double mean, double sigma, double max_sigmas) {
    for (;;) {
      const double v = normal(mean, sigma);
      if (std::abs(v - mean) <= max_sigmas * sigma) return v;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace skeletree
