#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace manip::detail {

/// Seeded generator with fully specified output (mt19937_64 + fixed
/// transforms), so artifacts are reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t integer(std::uint64_t n) { return eng_() % n; }

  /// Standard normal via Box-Muller (cosine branch only).
  double gaussian() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace manip::detail
