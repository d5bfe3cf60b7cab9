#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "phaselin/field.hpp"

namespace phaselin {

/// SplitMix64 finalizer; used to turn (seed, counter) pairs into
/// well-mixed engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. Child streams are derived from the seed and a
/// counter only, never from the parent's consumption state, so results do
/// not depend on the order in which workers pull streams.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  RandomStream split(std::uint64_t index) const {
    return RandomStream(mix64(seed_ ^ mix64(index + 0x632BE59BD9B4E019ULL)));
  }

  double normal() { return normal_(engine_); }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Standard normal for reals, CN(0,1) for complex (unit total variance).
  template <FieldScalar S>
  S standard() {
    if constexpr (is_complex_v<S>) {
      const double re = normal();
      const double im = normal();
      return Complex(re, im) * M_SQRT1_2;
    } else {
      return normal();
    }
  }

  template <FieldScalar S>
  Vec<S> standard_vector(Eigen::Index n) {
    Vec<S> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = standard<S>();
    return v;
  }

  RealVec normal_vector(Eigen::Index n) {
    RealVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace phaselin
