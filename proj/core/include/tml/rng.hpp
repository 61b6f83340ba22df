#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace tml {

/// splitmix64: counter-based generator with a 64-bit seed. The state is a
/// plain counter and the output a finalizer hash of it, so streams can be
/// split by hashing the seed. Every stochastic routine in the library draws
/// from one of these and records the seed, which keeps campaigns
/// bit-reproducible (std::normal_distribution is implementation-defined and
/// is deliberately not used).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Derive an independent stream (hash of the current counter).
  SplitMix64 split() { return SplitMix64(mix(next_u64())); }

  /// Uniform in (0, 1]: never zero, so it is safe under log().
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  /// Standard complex Gaussian CN(0,1): real and imaginary parts are
  /// independent N(0, 1/2). Exact Box-Muller in polar form.
  std::complex<double> next_complex_gaussian() {
    const double r = std::sqrt(-std::log(next_unit()));
    const double phi = 2.0 * std::numbers::pi * next_unit();
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  /// Real N(0,1).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(next_unit()));
    const double phi = 2.0 * std::numbers::pi * next_unit();
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace tml
