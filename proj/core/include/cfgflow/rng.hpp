#pragma once

#include <cstdint>
#include <string_view>

#include "cfgflow/tensor.hpp"

namespace cfgflow {

/// Counter-based random stream. Output i is a pure function of
/// (stream key, i), so identical seeds and call sequences reproduce
/// bit-identically, and streams derived via split() are independent of
/// how many values their parent has produced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Derives an independent stream keyed by (this stream, label, index).
  /// Pure: does not consume from or advance this stream.
  Rng split(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal via the Box-Muller transform (pair-cached).
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Tensor normal_tensor(std::vector<std::size_t> shape);
  Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi);

 private:
  Rng(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace cfgflow
