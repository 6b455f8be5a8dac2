#pragma once

#include <cstdint>

namespace polarscale {

/// SplitMix64 stream. Small, fast, and fully specified, so seeded runs are
/// byte-identical across platforms (std::uniform_int_distribution is not).
///
/// Worker streams are derived from a master seed by a counter scheme:
/// stream k uses seed mix(master + (k+1) * GOLDEN). Samplers that conceptually
/// run trials in parallel draw one stream per trial index, so the output does
/// not depend on how trials are scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n) by rejection on a power-of-two mask.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~0ULL >> __builtin_clzll((n - 1) | 1);
    std::uint64_t v;
    do {
      v = next_u64() & mask;
    } while (v >= n);
    return v;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Independent stream number k derived from this stream's seed.
  Rng stream(std::uint64_t k) const { return Rng(mix(state_ + (k + 1) * kGolden)); }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace polarscale
