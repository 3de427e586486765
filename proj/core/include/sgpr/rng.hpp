#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace sgpr {

/// Counter-based generator: output n of stream (seed, stream) is a pure
/// function of (seed, stream, n), so independent chains and replicates can be
/// split without sharing state. Mixing is SplitMix64's finalizer applied to a
/// Weyl sequence over the key.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0)
      : key_(mix(seed ^ mix(stream + 0x6a09e667f3bcc909ULL))), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  /// Value at an absolute counter position; does not advance.
  result_type at(std::uint64_t n) const { return mix(key_ + (n + 1) * 0x9e3779b97f4a7c15ULL); }

  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t n) { counter_ = n; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return to_unit((*this)()); }

  /// Uniform integer on [0, n). Multiply-shift; bias below 2^-64 * n.
  std::uint64_t below(std::uint64_t n) {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (one variate per call, two draws consumed).
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
  }

  static double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace sgpr
