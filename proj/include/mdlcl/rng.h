#pragma once

#include <cstdint>
#include <string_view>

#include "mdlcl/tensor.h"

namespace mdlcl {

/// Seedable, splittable generator. Every stochastic routine takes one of
/// these from its caller; nothing in the library owns hidden global state.
///
/// The stream is a SplitMix64 counter sequence, so `split` can derive
/// independent child streams from a key without advancing the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(mix(seed)) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1), never returns 0.
  double uniform_open();
  double normal();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  Tensor normal_tensor(const Shape& shape);

  Rng split(std::uint64_t key) const;
  Rng split(std::string_view key) const;

  std::uint64_t state() const { return state_; }

 private:
  static std::uint64_t mix(std::uint64_t z);
  std::uint64_t state_;
};

}  // namespace mdlcl
