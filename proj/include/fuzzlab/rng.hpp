#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace fuzzlab {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// 64-bit FNV-1a, used for content hashes in manifests and field-set keys.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Reproducible generator: std::mt19937_64 with portable bounded draws.
///
/// The standard distributions are implementation-defined, so all draws go
/// through the rejection sampler below to keep traces identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi].
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform(0, n - 1)); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01();

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Fisher-Yates shuffle.
  template <typename It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(uniform(0, static_cast<std::uint64_t>(i)));
      using std::swap;
      swap(first[i], first[j]);
    }
  }

  template <typename Container>
  void shuffle(Container& c) {
    shuffle(c.begin(), c.end());
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fuzzlab
