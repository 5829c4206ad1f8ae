#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace langgrid {

/// Counter-based random stream. Output i is a pure function of (key, i), so a
/// stream can be split by label without disturbing any sibling stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Child stream for (seed, label). Identical arguments give identical streams.
  static Rng split(std::uint64_t seed, std::string_view label);

  Rng child(std::string_view label) const;
  Rng child(std::string_view label, std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  /// Standard Gumbel(0, 1) sample.
  double gumbel();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

/// Deterministic per-item seed, e.g. the seed of episode `index` in an evaluation run.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index);

}  // namespace langgrid
