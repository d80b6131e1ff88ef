#pragma once

#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

// Deterministic random source. Everything stochastic in the project draws
// through this wrapper: the conversions from raw 64-bit outputs are spelled
// out here instead of relying on std::distributions, whose results differ
// across standard libraries.

namespace gumbelbox {

// splitmix64-style mixing, used to derive independent substreams from a
// base seed plus a salt (worker index, study cell, entity pair, ...).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return gen_(); }

  // Independent stream derived from the construction seed and a salt;
  // unaffected by how much this stream has already been consumed.
  Rng fork(std::uint64_t salt) const { return Rng(mix_seed(seed_, salt)); }

  // Uniform on the open interval (0, 1): the top 53 bits, centered, so both
  // endpoints are unreachable (log(-log(u)) stays finite).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, caching the second value.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Unbiased integer in [0, n) by mask rejection.
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t mask = ~0ULL >> std::countl_zero(n | 1);
    for (;;) {
      const std::uint64_t v = gen_() & mask;
      if (v < n) return v;
    }
  }

  // Fisher-Yates shuffle driven by below(), independent of std::shuffle.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace gumbelbox
