#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mdlcl/codelength.h"
#include "mdlcl/rng.h"
#include "mdlcl/snapshot.h"

namespace mdlcl {

enum class StrategyKind : std::uint8_t {
  kMlPlugin = 0,
  kBayesMixture = 1,
  kVcl = 2,
  kReplay = 3,
  kMlMixture = 4,
  kCatastrophic = 5,
};

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);
const std::vector<StrategyKind>& all_strategy_kinds();

/// Only these kinds may retain raw data between steps.
constexpr bool retains_data(StrategyKind kind) {
  return kind == StrategyKind::kMlPlugin || kind == StrategyKind::kBayesMixture;
}

/// Point-estimate kinds encode with a single parameter vector; the others
/// average over a distribution on parameters.
constexpr bool is_point_estimate(StrategyKind kind) {
  return kind == StrategyKind::kMlPlugin || kind == StrategyKind::kReplay || kind == StrategyKind::kCatastrophic;
}

/// A prequential prediction strategy over batches of type `Batch`.
/// `update` consumes the step-t observation; `encode` reports per-example
/// codelengths under the current state and never mutates it.
template <class Batch>
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual StrategyKind kind() const = 0;
  virtual std::size_t step() const = 0;
  virtual void update(const Batch& observation) = 0;
  virtual std::vector<Codelength> encode(const Batch& x, Rng rng) const = 0;
  virtual std::vector<std::uint8_t> serialize() const = 0;
  /// Bytes of retained raw data inside the serialized state.
  virtual std::size_t storage_bytes() const = 0;
};

struct StrategyHeader {
  StrategyKind kind;
  std::uint64_t step;
  std::uint64_t config_hash;
};

void write_strategy_header(BinaryWriter& w, const StrategyHeader& h);
StrategyHeader read_strategy_header(BinaryReader& r);

Codelength total(std::span<const Codelength> parts);

/// Encodes each observation before updating on it. Returns per-step totals.
template <class Batch>
std::vector<Codelength> prequential_codelengths(Strategy<Batch>& strategy, std::span<const Batch> stream,
                                                const Rng& rng) {
  std::vector<Codelength> out;
  out.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const auto bits = strategy.encode(stream[t], rng.split(t));
    out.push_back(total(bits));
    strategy.update(stream[t]);
  }
  return out;
}

}  // namespace mdlcl
