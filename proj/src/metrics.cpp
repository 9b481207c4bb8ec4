#include "mdlcl/metrics.h"

#include <limits>
#include <stdexcept>
#include <string>

namespace mdlcl {

Codelength forgetting(Codelength now, Codelength then) {
  if (now.is_infinite()) return Codelength::infinite();
  if (then.is_infinite()) return Codelength(0.0);
  const double d = now.bits() - then.bits();
  return Codelength(d > 0.0 ? d : 0.0);
}

void ForgettingLedger::record_baseline(std::size_t class_step, Codelength bits) {
  if (!baseline_.emplace(class_step, bits).second)
    throw std::logic_error("baseline for class step " + std::to_string(class_step) + " already recorded");
}

void ForgettingLedger::record_current(std::size_t class_step, Codelength bits) { current_[class_step] = bits; }

Codelength ForgettingLedger::baseline(std::size_t class_step) const {
  auto it = baseline_.find(class_step);
  if (it == baseline_.end()) throw std::out_of_range("no baseline for class step " + std::to_string(class_step));
  return it->second;
}

Codelength ForgettingLedger::current(std::size_t class_step) const {
  auto it = current_.find(class_step);
  if (it == current_.end()) throw std::out_of_range("no current value for class step " + std::to_string(class_step));
  return it->second;
}

Codelength ForgettingLedger::class_forgetting(std::size_t class_step) const {
  return forgetting(current(class_step), baseline(class_step));
}

double cumulative_average_forgetting(const ForgettingLedger& ledger, std::size_t t, std::size_t input_dim) {
  if (t == 0 || input_dim == 0) throw std::invalid_argument("cumulative forgetting needs t >= 1 and input_dim >= 1");
  Codelength sum(0.0);
  for (std::size_t i = 1; i <= t; ++i) sum += ledger.class_forgetting(i);
  if (sum.is_infinite()) return std::numeric_limits<double>::infinity();
  return sum.bits() / static_cast<double>(t) / static_cast<double>(input_dim);
}

std::string_view to_string(EvalKind kind) {
  return kind == EvalKind::kPrequentialNext ? "prequential-next" : "forgetting-heldout";
}

double prequential_total(std::span<const CodelengthRecord> records) {
  if (records.empty()) throw std::invalid_argument("prequential_total of no records");
  Codelength bits(0.0);
  std::size_t count = 0;
  const std::size_t dim = records.front().input_dim;
  for (const CodelengthRecord& r : records) {
    if (r.input_dim != dim) throw std::invalid_argument("prequential_total: records disagree on input_dim");
    bits += r.total_bits;
    count += r.example_count;
  }
  if (count == 0) throw std::invalid_argument("prequential_total: no examples");
  return bits.bits() / static_cast<double>(count) / static_cast<double>(dim);
}

}  // namespace mdlcl
