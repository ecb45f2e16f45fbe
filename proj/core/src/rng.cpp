#include "cfgflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace cfgflow {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; full-period bijection on u64.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

Rng Rng::split(std::string_view label, std::uint64_t index) const {
  std::uint64_t k = key_;
  k = mix64(k ^ fnv1a64(label));
  k = mix64(k + kGolden * (index + 1));
  return Rng(k, 0);
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // 1 - u keeps the log argument in (0, 1].
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Multiply-shift mapping; bias is negligible for the n used here.
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

Tensor Rng::normal_tensor(std::vector<std::size_t> shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = normal();
  return t;
}

Tensor Rng::uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = lo + (hi - lo) * uniform();
  return t;
}

}  // namespace cfgflow
