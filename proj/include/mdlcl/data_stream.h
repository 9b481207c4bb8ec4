#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdlcl/tensor.h"

namespace mdlcl {

/// One step's dataset: every training example of one class.
struct Observation {
  Tensor examples;  // [n, input_dim], values in [0, 1]
  int class_label = 0;
};

struct ClassIncrementalStream {
  std::vector<Observation> steps;
  /// Held-out forgetting examples per step, [batches * batch_size, input_dim].
  std::vector<Tensor> heldout;
  std::size_t heldout_batches = 0;
  std::size_t heldout_batch_size = 0;
  std::size_t input_dim = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return steps.size(); }
};

struct SyntheticData {
  Tensor examples;
  std::vector<int> labels;
  Tensor prototypes;  // [n_classes, input_dim]
};

/// Random binary prototypes, one per class, with each pixel of each example
/// flipped independently with probability `noise_rate`. Labels are 0..n-1 in
/// blocks of `examples_per_class`.
///
/// Prototypes are a shared random base pattern with each pixel flipped with
/// probability `prototype_spread`; at 0.5 they are independent uniform.
SyntheticData synthetic_data(std::size_t n_classes, std::size_t examples_per_class, std::size_t input_dim,
                             double noise_rate, std::uint64_t seed, double prototype_spread = 0.5);

/// Splits labeled examples into one Observation per class in `order`,
/// withholding `heldout_batches * heldout_batch_size` random examples of each
/// class for forgetting evaluation.
ClassIncrementalStream class_incremental(const Tensor& examples, std::span<const int> labels,
                                         std::span<const int> order, std::size_t heldout_batches,
                                         std::size_t heldout_batch_size, std::uint64_t seed);

/// Like class_incremental, but held-out batches are drawn from a separate
/// pool (e.g. a test split) and the training examples are used whole.
ClassIncrementalStream class_incremental(const Tensor& train, std::span<const int> train_labels,
                                         const Tensor& pool, std::span<const int> pool_labels,
                                         std::span<const int> order, std::size_t heldout_batches,
                                         std::size_t heldout_batch_size, std::uint64_t seed);

ClassIncrementalStream synthetic_stream(std::size_t n_classes, std::size_t examples_per_class, std::size_t input_dim,
                                        double noise_rate, std::size_t heldout_batches,
                                        std::size_t heldout_batch_size, std::uint64_t seed,
                                        double prototype_spread = 0.5);

}  // namespace mdlcl
