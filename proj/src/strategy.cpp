#include "mdlcl/strategy.h"

#include <stdexcept>
#include <string>

namespace mdlcl {

namespace {
constexpr std::string_view kStrategyMagic = "MDLSTAT1";
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kMlPlugin: return "ml-plugin";
    case StrategyKind::kBayesMixture: return "bayes-mixture";
    case StrategyKind::kVcl: return "vcl";
    case StrategyKind::kReplay: return "replay";
    case StrategyKind::kMlMixture: return "ml-mixture";
    case StrategyKind::kCatastrophic: return "catastrophic";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (StrategyKind k : all_strategy_kinds())
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

const std::vector<StrategyKind>& all_strategy_kinds() {
  static const std::vector<StrategyKind> kinds = {
      StrategyKind::kMlPlugin, StrategyKind::kBayesMixture, StrategyKind::kVcl,
      StrategyKind::kReplay,   StrategyKind::kMlMixture,    StrategyKind::kCatastrophic,
  };
  return kinds;
}

void write_strategy_header(BinaryWriter& w, const StrategyHeader& h) {
  w.magic(kStrategyMagic);
  w.u8(static_cast<std::uint8_t>(h.kind));
  w.u64(h.step);
  w.u64(h.config_hash);
}

StrategyHeader read_strategy_header(BinaryReader& r) {
  r.expect_magic(kStrategyMagic);
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(StrategyKind::kCatastrophic))
    throw SnapshotError("unknown strategy kind tag " + std::to_string(kind));
  StrategyHeader h{static_cast<StrategyKind>(kind), 0, 0};
  h.step = r.u64();
  h.config_hash = r.u64();
  return h;
}

Codelength total(std::span<const Codelength> parts) {
  Codelength sum;
  for (const Codelength& c : parts) sum += c;
  return sum;
}

}  // namespace mdlcl
