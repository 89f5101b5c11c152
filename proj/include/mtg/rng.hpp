#pragma once

#include <cstdint>
#include <random>

namespace mtg {

// Seeded draws for test-field generation and property sampling.  The mapping
// from engine output to [0,1) is pinned here rather than delegated to
// std::uniform_real_distribution so that identical seeds give identical
// streams on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mtg
