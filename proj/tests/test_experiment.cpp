#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mdlcl/experiment.h"

using namespace mdlcl;

namespace {

// Never learns: codes everything with the parameters it started from.
class FrozenStrategy final : public TensorStrategy {
 public:
  FrozenStrategy(StrategyKind kind, VaeParams init) : kind_(kind), params_(std::move(init)) {}
  StrategyKind kind() const override { return kind_; }
  std::size_t step() const override { return step_; }
  void update(const Tensor&) override { ++step_; }
  std::vector<Codelength> encode(const Tensor& x, Rng rng) const override {
    std::vector<Codelength> out;
    for (double b : codelength(x, params_, rng, 4)) out.emplace_back(b);
    return out;
  }
  std::vector<std::uint8_t> serialize() const override { return {}; }
  std::size_t storage_bytes() const override { return 0; }

 private:
  StrategyKind kind_;
  VaeParams params_;
  std::size_t step_ = 0;
};

StrategyFactory frozen_factory() {
  return [](StrategyKind kind, const NeuralConfig&, const VaeParams& init, Rng) {
    return std::make_unique<FrozenStrategy>(kind, init);
  };
}

ExperimentConfig small_config() {
  ExperimentConfig c = preset_config("tiny");
  c.n_classes = 3;
  c.examples_per_class = 24;
  c.heldout_batches = 2;
  c.heldout_batch_size = 4;
  c.neural.arch = {16, {8}, 2};
  c.neural.epochs = 10;
  c.neural.eval_samples = 2;
  c.seeds = {1};
  c.threads = 1;
  return c;
}

CellSpec spec_for(const ExperimentConfig& c, StrategyKind kind) {
  return {std::string(to_string(kind)), kind, c.neural, c.seeds[0]};
}

std::size_t count_metric(const CellResult& r, const std::string& m) {
  std::size_t n = 0;
  for (const auto& row : r.rows) n += row.metric == m;
  return n;
}

}  // namespace

TEST(Experiment, FrozenLearnerNeverForgets) {
  const ExperimentConfig c = small_config();
  const auto stream = build_stream(c, 1);
  const CellResult r = run_cell(stream, spec_for(c, StrategyKind::kMlPlugin), frozen_factory());
  ASSERT_TRUE(r.ok) << r.error;
  ASSERT_EQ(r.cum_forget_bpd.size(), 3u);
  for (double f : r.cum_forget_bpd) EXPECT_EQ(f, 0.0);
  for (const auto& row : r.rows)
    if (row.metric == "forgetting_bpd") EXPECT_EQ(row.value, 0.0);
}

TEST(Experiment, CatastrophicLearnerForgets) {
  // Enough training that each class overwrites the last.
  ExperimentConfig c = small_config();
  c.prototype_spread = 0.5;
  c.neural.epochs = 150;
  c.neural.adam.lr = 1e-2;
  const CellResult r = run_cell(build_stream(c, 1), spec_for(c, StrategyKind::kCatastrophic));
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_GT(r.cum_forget_bpd.back(), 0.0);
}

TEST(Experiment, RowLayout) {
  const ExperimentConfig c = small_config();
  const CellResult r = run_cell(build_stream(c, 1), spec_for(c, StrategyKind::kVcl));
  ASSERT_TRUE(r.ok) << r.error;
  const std::size_t T = 3;
  EXPECT_EQ(count_metric(r, "preq_bits"), T);
  EXPECT_EQ(count_metric(r, "preq_bpd"), T);
  EXPECT_EQ(count_metric(r, "cum_forget_bpd"), T);
  EXPECT_EQ(count_metric(r, "baseline_bits"), T);
  EXPECT_EQ(count_metric(r, "heldout_bits"), T * (T + 1) / 2);
  EXPECT_EQ(count_metric(r, "forgetting_bpd"), T * (T + 1) / 2);
  ASSERT_EQ(r.heldout_bits.size(), T);
  for (std::size_t t = 0; t < T; ++t) EXPECT_EQ(r.heldout_bits[t].size(), t + 1);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(std::isfinite(row.value)) << row.metric;
    if (row.metric != "preq_bpd" && row.metric != "preq_bits") EXPECT_GE(row.value, 0.0) << row.metric;
  }
  // The prequential total is the mean over every encoded example.
  double bits = 0, n = 0;
  for (const auto& rec : r.prequential) bits += rec.total_bits.bits(), n += static_cast<double>(rec.example_count);
  EXPECT_NEAR(r.prequential_bpd, bits / n / 16, 1e-12);
}

TEST(Experiment, RunsAreDeterministic) {
  const ExperimentConfig c = small_config();
  const auto stream = build_stream(c, 1);
  const CellResult a = run_cell(stream, spec_for(c, StrategyKind::kReplay));
  const CellResult b = run_cell(stream, spec_for(c, StrategyKind::kReplay));
  EXPECT_EQ(csv_body({a}), csv_body({b}));
}

TEST(Experiment, FirstClassIsCodedWithSharedInit) {
  const ExperimentConfig c = small_config();
  const auto stream = build_stream(c, 1);
  double first = NAN;
  for (auto kind : all_strategy_kinds()) {
    const CellResult r = run_cell(stream, spec_for(c, kind));
    ASSERT_TRUE(r.ok) << r.error;
    const double bits = r.prequential.front().total_bits.bits();
    if (std::isnan(first)) first = bits;
    EXPECT_EQ(bits, first) << to_string(kind);
  }
}

TEST(Experiment, FailuresAreReportedNotThrown) {
  const ExperimentConfig c = small_config();
  StrategyFactory broken = [](StrategyKind, const NeuralConfig&, const VaeParams&, Rng) -> std::unique_ptr<TensorStrategy> {
    throw std::runtime_error("boom");
  };
  const CellResult r = run_cell(build_stream(c, 1), spec_for(c, StrategyKind::kVcl), broken);
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.error.find("boom"), std::string::npos);
}

TEST(Experiment, CsvFormat) {
  const ExperimentConfig c = small_config();
  std::ostringstream log;
  const auto cells = run_cells(c, {spec_for(c, StrategyKind::kCatastrophic), spec_for(c, StrategyKind::kMlPlugin)}, log,
                               frozen_factory());
  const std::string body = csv_body(cells);
  EXPECT_EQ(body.rfind("strategy,seed,step,class,metric,value,unit\n", 0), 0u);
  std::istringstream lines(body);
  std::string line;
  std::getline(lines, line);
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6) << line;
    ++n;
  }
  EXPECT_EQ(n, cells[0].rows.size() + cells[1].rows.size());
  EXPECT_NE(log.str().find("cell catastrophic seed=1 ok"), std::string::npos) << log.str();
}

TEST(Experiment, SweepLabels) {
  EXPECT_EQ(sweep_arm_label(std::nullopt), "bayes-mixture/none");
  EXPECT_EQ(sweep_arm_label(0.1), "bayes-mixture/sigma=0.1");
}
