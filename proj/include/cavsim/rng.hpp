#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cavsim {

/// Seeded generator with self-contained samplers.  The standard library's
/// distributions are implementation-defined, so byte-identical outputs across
/// toolchains require rolling the few we need on top of mt19937_64.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t integer() { return engine_(); }

  double uniform() {  // [0, 1)
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  double exponential(double mean) {
    double u = 0.0;
    while (u == 0.0) u = uniform();
    return -mean * std::log(u);
  }

  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      // Knuth's product method
      const double limit = std::exp(-mean);
      long long k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform();
      } while (p > limit);
      return k - 1;
    }
    // Normal approximation with continuity correction is adequate for the
    // count levels used here (mean >= 30).
    const double v = std::round(mean + std::sqrt(mean) * normal());
    return v < 0.0 ? 0 : static_cast<long long>(v);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cavsim
