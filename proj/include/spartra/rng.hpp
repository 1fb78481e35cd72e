#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace spartra {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based SplitMix64: output t is mix64(key + t * golden), so any draw is
// addressable by (seed, stream, counter) and streams split without shared state.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }

  CounterRng split(std::uint64_t stream) const { return CounterRng(key_, stream); }

  std::uint64_t counter() const { return counter_; }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal by inverse CDF: Phi^{-1}(u) = -sqrt(2) erfc^{-1}(2u).
  double normal() { return -1.41421356237309504880 * boost::math::erfc_inv(2.0 * uniform()); }

  int below(int n) {
    const auto v = static_cast<int>(uniform() * n);
    return std::min(v, n - 1);
  }

  // Uniform k-subset of {0..n-1}, returned sorted.
  std::vector<int> subset(int n, int k) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) std::swap(idx[i], idx[i + below(n - i)]);
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace spartra
