#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ruleforge/errors.hpp"

namespace ruleforge {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic xoshiro256++ generator. The standard library distributions are
// implementation-defined, so all sampling lives here to keep outputs
// bit-identical for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  // Independent stream addressed by (seed, a, b), e.g. (run seed, generation,
  // individual index). Streams never share state.
  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t sm = seed;
    std::uint64_t mixed = detail::splitmix64(sm) ^ (a * 0x9e3779b97f4a7c15ULL);
    mixed = detail::splitmix64(mixed) ^ (b * 0xc2b2ae3d27d4eb4fULL);
    (void)detail::splitmix64(mixed);
    return Rng(mixed);
  }

  std::uint64_t next() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw ContractError("uniform_below: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Uniform integer in [lo, hi] inclusive.
  long long uniform_int(long long lo, long long hi) {
    if (hi < lo) throw ContractError("uniform_int: empty range");
    return lo + static_cast<long long>(
                    uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via the Marsaglia polar method (second value cached).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * m;
    has_cached_ = true;
    return u * m;
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Index sampled proportionally to non-negative weights; uniform if all zero.
  std::size_t weighted_index(std::span<const double> weights) {
    if (weights.empty()) throw ContractError("weighted_index: empty weights");
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ContractError("weighted_index: negative weight");
      total += w;
    }
    if (total <= 0.0) return static_cast<std::size_t>(uniform_below(weights.size()));
    double target = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      target -= weights[i];
      if (target < 0.0) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ruleforge
