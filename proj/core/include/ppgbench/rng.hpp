#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ppgbench {

// Deterministic RNG helpers. Distributions are hand-rolled on top of
// mt19937_64 so sampled streams depend only on the seed, not on the
// standard library's unspecified distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Box-Muller; one fresh pair of uniforms per sample keeps the stream
  // position independent of call parity.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Fisher-Yates, pinned here rather than std::shuffle so fold assignments
  // are reproducible across standard library implementations.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    if (values.size() < 2) return;
    for (std::size_t i = values.size() - 1; i > 0; --i) {
      std::size_t j = index(i + 1);
      std::swap(values[i], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ppgbench
