#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ssvb/math.hpp"

namespace ssvb {

/// splitmix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// RNG purposes get fixed ids so every (seed, rep, purpose) triple names a
/// reproducible substream, independent of call order.
enum class RngPurpose : std::uint64_t {
  design = 1,
  signal = 2,
  labels = 3,
  predictive = 4,
  cone = 5,
  subsets = 6,
  sweep_order = 7,
};

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t rep,
                                    RngPurpose purpose) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (0xA0761D6478BD642FULL + rep));
  h = mix64(h ^ (0xE7037ED1A0B428DBULL + static_cast<std::uint64_t>(purpose)));
  return h;
}

/// mt19937_64 stream with hand-rolled distributions. std::*_distribution is
/// implementation-defined, so uniforms and normals are generated here to keep
/// outputs byte-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  Rng(std::uint64_t seed, std::uint64_t rep, RngPurpose purpose)
      : gen_(substream_seed(seed, rep, purpose)) {}

  /// Uniform on (0, 1].
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform01() <= p; }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ssvb
