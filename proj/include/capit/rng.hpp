#pragma once

#include <cstdint>
#include <vector>

namespace capit {

/// SplitMix64 run in counter mode: the k-th output (k = 1, 2, ...) is
/// mix64(key + k * 0x9E3779B97F4A7C15). The whole stream is a pure function of
/// (key, k), so any language with 64-bit wrapping arithmetic reproduces it.
///
/// Stream splitting: replicate r of a run seeded with `base` uses
/// key = derive_seed(base, r) = mix64(base ^ mix64(r + 1)).
///
/// Normals use Box-Muller on two consecutive uniforms (cosine branch first,
/// sine branch cached for the next call); uniforms take the top 53 bits.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open_zero();
  double normal();
  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Fisher-Yates permutation of 0..n-1 drawn from rng (last index swapped first).
std::vector<long> random_permutation(long n, CounterRng& rng);

}  // namespace capit
