#pragma once

#include <cstdint>

namespace splod {

/// SplitMix64 stream. Fixed algorithm so coefficient fields are
/// bit-reproducible across platforms and languages:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
/// Doubles are drawn as (output >> 11) * 2^-53, uniform in [0,1).
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [a,b).
  double next_double(double a, double b) {
    return a + (b - a) * next_double();
  }

private:
  std::uint64_t state_;
};

} // namespace splod
