#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace gridloop {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of keys into a child seed. Order matters.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/**
 * Counter-based random stream keyed by (seed, key).
 *
 * Output n is mix64(base + n * golden) where base = derive_seed(seed, {key}).
 * Streams with different keys are independent and any stream can be
 * regenerated without touching the others, which is what keeps per-home and
 * per-tree generation order-free. Satisfies UniformRandomBitGenerator.
 *
 * The helper distributions below are written out by hand so that results do
 * not depend on the standard library's distribution implementations.
 */
class Stream {
public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t key) noexcept : base_(derive_seed(seed, {key})) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(base_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). Multiply-shift; bias is below 2^-64 * n.
  std::uint64_t index(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (one variate per call, no caching).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

} // namespace gridloop
