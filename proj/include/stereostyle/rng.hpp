#pragma once

#include <cstdint>

namespace stereostyle {

/// 64-bit linear congruential generator (Knuth MMIX constants):
///   state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64)
/// Outputs are taken from the high bits. Used wherever fixtures must be
/// bit-reproducible across platforms and standard libraries.
class Lcg64 {
public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) noexcept : state_(seed) { next(); }

  std::uint64_t next() noexcept {
    state_ = state_ * kMultiplier + kIncrement;
    return state_;
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept { return (next() >> 32) % n; }

private:
  std::uint64_t state_;
};

}  // namespace stereostyle
