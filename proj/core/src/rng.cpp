#include "langgrid/rng.hpp"

#include <cmath>

#include "langgrid/error.hpp"

namespace langgrid {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

Rng Rng::split(std::uint64_t seed, std::string_view label) { return Rng(seed).child(label); }

Rng Rng::child(std::string_view label) const {
  return Rng(mix64(key_ ^ mix64(fnv1a64(label))), 0, 0);
}

Rng Rng::child(std::string_view label, std::uint64_t index) const {
  return Rng(mix64(child(label).key_ ^ mix64(index + kGolden)), 0, 0);
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw PreconditionError("Rng::below: n must be positive");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double Rng::gumbel() {
  // u in (0, 1): shift away from zero so the double log is finite.
  const double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(-std::log(u));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return Rng(seed).child(label, index).next_u64();
}

}  // namespace langgrid
