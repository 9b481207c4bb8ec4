#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string_view>

#include "mdlcl/codelength.h"
#include "mdlcl/strategy.h"

namespace mdlcl {

/// max(now - then, 0). An infinite `now` yields the infinite value; an
/// infinite `then` with a finite `now` yields 0.
Codelength forgetting(Codelength now, Codelength then);

/// Held-out codelengths of each class, in bits per example, keyed by the
/// 1-based step at which the class was observed.
class ForgettingLedger {
 public:
  /// L(x_i | theta_i). Throws if class i already has a baseline.
  void record_baseline(std::size_t class_step, Codelength bits);
  /// L(x_i | theta_t) for the current t; overwrites the previous value.
  void record_current(std::size_t class_step, Codelength bits);

  bool has_baseline(std::size_t class_step) const { return baseline_.contains(class_step); }
  Codelength baseline(std::size_t class_step) const;
  Codelength current(std::size_t class_step) const;
  /// forgetting(current, baseline) for one class.
  Codelength class_forgetting(std::size_t class_step) const;

 private:
  std::map<std::size_t, Codelength> baseline_;
  std::map<std::size_t, Codelength> current_;
};

/// (1/t) sum_{i<=t} forgetting(L(x_i|theta_t), L(x_i|theta_i)) / input_dim,
/// in bits per dimension; +inf when any term is infinite.
/// Throws std::out_of_range when a baseline or current value is missing.
double cumulative_average_forgetting(const ForgettingLedger& ledger, std::size_t t, std::size_t input_dim);

enum class EvalKind : std::uint8_t { kPrequentialNext, kForgettingHeldout };

std::string_view to_string(EvalKind kind);

struct CodelengthRecord {
  std::size_t step = 0;
  int class_label = 0;
  StrategyKind kind = StrategyKind::kMlPlugin;
  EvalKind eval_kind = EvalKind::kPrequentialNext;
  /// Sum over the step's examples.
  Codelength total_bits;
  std::size_t example_count = 0;
  std::size_t input_dim = 1;

  Codelength bits_per_example() const { return total_bits / static_cast<double>(example_count); }
  double bpd() const { return bits_per_example().bits() / static_cast<double>(input_dim); }
};

/// sum total bits / sum example count / input_dim. Throws on an empty list
/// or inconsistent input dims.
double prequential_total(std::span<const CodelengthRecord> records);

}  // namespace mdlcl
