#pragma once

// Reproducible random variates. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the transformations below are
// implemented here because std:: distributions are implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>

namespace nvp {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Poisson(mu): multiplication method for mu < 10, PTRS (Hormann 1993)
  /// transformed rejection otherwise.
  std::uint64_t poisson(double mu) {
    if (!(mu > 0.0)) return 0;
    if (mu < 10.0) {
      const double limit = std::exp(-mu);
      double prod = uniform();
      std::uint64_t k = 0;
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    const double slam = std::sqrt(mu), loglam = std::log(mu);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
      const double rhs = -mu + k * loglam - std::lgamma(k + 1.0);
      if (lhs <= rhs) return static_cast<std::uint64_t>(k);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nvp
