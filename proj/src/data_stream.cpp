#include "mdlcl/data_stream.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mdlcl/rng.h"

namespace mdlcl {

SyntheticData synthetic_data(std::size_t n_classes, std::size_t examples_per_class, std::size_t input_dim,
                             double noise_rate, std::uint64_t seed, double prototype_spread) {
  if (n_classes == 0 || examples_per_class == 0 || input_dim == 0)
    throw std::invalid_argument("synthetic data needs positive class count, class size and input_dim");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw std::invalid_argument("noise_rate must lie in [0, 0.5)");
  if (!(prototype_spread >= 0.0 && prototype_spread <= 0.5))
    throw std::invalid_argument("prototype_spread must lie in [0, 0.5]");
  Rng rng(seed);
  Rng proto_rng = rng.split("prototypes");
  Rng noise_rng = rng.split("noise");
  SyntheticData out{Tensor({n_classes * examples_per_class, input_dim}), {}, Tensor({n_classes, input_dim})};
  std::vector<double> base(input_dim);
  for (double& v : base) v = proto_rng.uniform() < 0.5 ? 0.0 : 1.0;
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t j = 0; j < input_dim; ++j)
      out.prototypes.at(c, j) = proto_rng.uniform() < prototype_spread ? 1.0 - base[j] : base[j];
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t e = 0; e < examples_per_class; ++e) {
      const std::size_t row = c * examples_per_class + e;
      for (std::size_t j = 0; j < input_dim; ++j) {
        const double p = out.prototypes.at(c, j);
        out.examples.at(row, j) = noise_rng.uniform() < noise_rate ? 1.0 - p : p;
      }
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> rows_with_label(std::span<const int> labels, int label) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) rows.push_back(i);
  return rows;
}

void shuffle(std::vector<std::size_t>& v, Rng rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

void check_order(std::span<const int> order) {
  if (order.empty()) throw std::invalid_argument("class order is empty");
  std::vector<int> sorted(order.begin(), order.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("class order repeats a class");
}

ClassIncrementalStream build(const Tensor& train, std::span<const int> train_labels, const Tensor* pool,
                             std::span<const int> pool_labels, std::span<const int> order, std::size_t batches,
                             std::size_t batch_size, std::uint64_t seed) {
  if (train.rank() != 2 || train.rows() != train_labels.size())
    throw std::invalid_argument("examples and labels disagree in length");
  check_order(order);
  const std::size_t held = batches * batch_size;
  ClassIncrementalStream s;
  s.heldout_batches = batches;
  s.heldout_batch_size = batch_size;
  s.input_dim = train.cols();
  s.seed = seed;
  Rng rng = Rng(seed).split("heldout");
  for (int label : order) {
    std::vector<std::size_t> rows = rows_with_label(train_labels, label);
    if (rows.empty()) throw std::invalid_argument("class " + std::to_string(label) + " has no examples");
    std::vector<std::size_t> pool_rows = pool ? rows_with_label(pool_labels, label) : rows;
    shuffle(pool_rows, rng.split(static_cast<std::uint64_t>(label)));
    const std::size_t need = held + (pool ? 0 : 1);
    if (pool_rows.size() < need)
      throw std::invalid_argument("class " + std::to_string(label) + " has too few examples for its held-out batches");
    std::vector<std::size_t> held_rows(pool_rows.begin(), pool_rows.begin() + static_cast<std::ptrdiff_t>(held));
    std::vector<std::size_t> train_rows;
    if (pool) {
      train_rows = rows;
    } else {
      // Keep the update set in original order.
      std::vector<std::size_t> rest(pool_rows.begin() + static_cast<std::ptrdiff_t>(held), pool_rows.end());
      std::sort(rest.begin(), rest.end());
      train_rows = std::move(rest);
    }
    s.steps.push_back({train.gather_rows(train_rows), label});
    s.heldout.push_back(held ? (pool ? *pool : train).gather_rows(held_rows) : Tensor({0, train.cols()}));
  }
  return s;
}

}  // namespace

ClassIncrementalStream class_incremental(const Tensor& examples, std::span<const int> labels,
                                         std::span<const int> order, std::size_t heldout_batches,
                                         std::size_t heldout_batch_size, std::uint64_t seed) {
  return build(examples, labels, nullptr, {}, order, heldout_batches, heldout_batch_size, seed);
}

ClassIncrementalStream class_incremental(const Tensor& train, std::span<const int> train_labels,
                                         const Tensor& pool, std::span<const int> pool_labels,
                                         std::span<const int> order, std::size_t heldout_batches,
                                         std::size_t heldout_batch_size, std::uint64_t seed) {
  if (pool.rank() != 2 || pool.rows() != pool_labels.size() || pool.cols() != train.cols())
    throw std::invalid_argument("held-out pool does not match the training examples");
  return build(train, train_labels, &pool, pool_labels, order, heldout_batches, heldout_batch_size, seed);
}

ClassIncrementalStream synthetic_stream(std::size_t n_classes, std::size_t examples_per_class, std::size_t input_dim,
                                        double noise_rate, std::size_t heldout_batches,
                                        std::size_t heldout_batch_size, std::uint64_t seed,
                                        double prototype_spread) {
  const SyntheticData data =
      synthetic_data(n_classes, examples_per_class, input_dim, noise_rate, seed, prototype_spread);
  std::vector<int> order(n_classes);
  std::iota(order.begin(), order.end(), 0);
  return class_incremental(data.examples, data.labels, order, heldout_batches, heldout_batch_size, seed);
}

}  // namespace mdlcl
