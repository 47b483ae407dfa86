#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace calnet {

// Counter-based random numbers. Every draw is a pure function of the keys
// that produced it, so results do not depend on evaluation order or on the
// standard library's distribution implementations.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

/// Uniform in (0, 1): never returns 0 so it is safe inside log().
inline double u64_to_unit(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

/// One standard-normal draw keyed by an arbitrary 64-bit key (Box-Muller,
/// discarding the second variate).
inline double keyed_normal(std::uint64_t key) {
  const double u1 = u64_to_unit(splitmix64(hash_mix(key, 0x5bf03635U)));
  const double u2 = u64_to_unit(splitmix64(hash_mix(key, 0xa48c2a75U)));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Small sequential generator for the synthetic-data module.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x853c49e6748fea9bULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_);
  }

  double uniform() { return u64_to_unit(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Index in [0, n) drawn proportionally to the given nonnegative weights.
  template <class Vec>
  std::size_t weighted_index(const Vec& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < std::size(weights); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return std::size(weights) - 1;
  }

 private:
  std::uint64_t state_;
};

/// Deterministic source of reparameterization noise for ELBO evaluation.
/// Draws are keyed by (seed, step, record key, sample, dimension) so that
/// record order and any internal concurrency cannot change results.
struct EpsSource {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  double normal(std::uint64_t record_key, std::uint64_t sample, std::uint64_t dim) const {
    std::uint64_t k = hash_mix(seed, 0x7e46c1a3ULL);
    k = hash_mix(k, step);
    k = hash_mix(k, record_key);
    k = hash_mix(k, sample);
    k = hash_mix(k, dim);
    return keyed_normal(k);
  }
};

}  // namespace calnet
