#pragma once

#include <cstdint>

namespace reviewkit {

/// SplitMix64 (Steele, Lea & Flood 2014): a counter-based generator with a
/// 64-bit state. Chosen because the algorithm is a published fixed sequence
/// of integer operations, so the same seed yields the same stream on every
/// platform, and `split()` derives an independent child stream
/// deterministically.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream; advances this stream by one draw.
  SplitMix64 split() { return SplitMix64(next()); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection-sampled so the result is exactly
  /// uniform and identical across platforms.
  uint64_t next_below(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform double on [lo, hi).
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  uint64_t state_;
};

}  // namespace reviewkit
