#pragma once

// Counter-based random streams. Draw i of the stream with key k is
// mix64(k + (i + 1) * 0x9E3779B97F4A7C15), where mix64 is the SplitMix64
// finalizer. Uniform doubles take the top 53 bits; normals use Box-Muller
// on consecutive uniform pairs. The construction only needs 64-bit integer
// arithmetic, so seeds reproduce in any language.

#include <cstdint>
#include <limits>
#include <vector>

namespace gevsel {

std::uint64_t mix64(std::uint64_t z);

/// Seed of substream `stream` under `base`: mix64(base ^ mix64(stream + golden)).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// [0, 1)
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Inclusive range, rejection sampled (no modulo bias).
  int uniform_int(int lo, int hi);
  double normal();

  /// k distinct indices from {0..n-1}, in draw order (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gevsel
