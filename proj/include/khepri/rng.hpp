#pragma once

#include <cstdint>
#include <random>

namespace khepri {

// Seeded stream with explicit value mapping. std::uniform_*_distribution is
// implementation-defined, so golden sequences would differ across standard
// libraries; mt19937_64 itself is fully specified.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [lo, hi].
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return engine_();  // full 64-bit range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return lo + v % span;
  }

  // Uniform double in [lo, hi).
  double uniform_real(double lo, double hi) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace khepri
