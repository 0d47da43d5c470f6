#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mrprime {

/// Deterministic pseudo-random stream. The engine is std::mt19937_64 (a fixed,
/// portable algorithm); all distributions are hand-rolled on top of raw draws so
/// the value sequence is identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [lo, hi], both inclusive; masked rejection sampling.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via the polar Box-Muller method.
  double gaussian();

  double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

  /// Fisher-Yates shuffle driven by uniform_int.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
      const std::int64_t j = uniform_int(0, i);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

  /// k distinct values from [0, n) in increasing order, sampled without replacement.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// FNV-1a 64-bit over a byte range, chainable via the h argument.
std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t h = 14695981039346656037ull);

/// Derived stream seed: hashes (root, tag, index) so independent consumers get
/// decorrelated, reproducible streams.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

} // namespace mrprime
