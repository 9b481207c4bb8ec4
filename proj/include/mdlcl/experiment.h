#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdlcl/config.h"
#include "mdlcl/data_stream.h"
#include "mdlcl/metrics.h"
#include "mdlcl/neural_strategy.h"

namespace mdlcl {

using TensorStrategy = Strategy<Tensor>;
using StrategyFactory =
    std::function<std::unique_ptr<TensorStrategy>(StrategyKind, const NeuralConfig&, const VaeParams& init, Rng)>;

/// Builds the neural strategies.
StrategyFactory neural_factory();

/// One long-format CSV row.
struct ResultRow {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  int class_label = 0;
  std::string metric;
  double value = 0.0;
  std::string unit;
};

/// One (strategy arm, seed) run. `label` names the arm in output.
struct CellSpec {
  std::string label;
  StrategyKind kind = StrategyKind::kMlPlugin;
  NeuralConfig neural;
  std::uint64_t seed = 0;
};

struct CellResult {
  CellSpec spec;
  bool ok = false;
  std::string error;
  std::vector<ResultRow> rows;
  std::vector<CodelengthRecord> prequential;
  /// heldout_bits[t-1][i-1]: bits per example of class i after step t, i <= t.
  std::vector<std::vector<double>> heldout_bits;
  /// Cumulative average forgetting after each step, bpd.
  std::vector<double> cum_forget_bpd;
  double prequential_bpd = 0.0;
  double seconds = 0.0;
};

/// Steps one strategy through the stream. Class 1 is encoded with the
/// seed's shared initial parameters; class t > 1 with the strategy trained
/// through class t-1. After each update every seen class's held-out batch is
/// re-encoded. Errors are caught and reported in the result.
CellResult run_cell(const ClassIncrementalStream& stream, const CellSpec& spec,
                    const StrategyFactory& factory = neural_factory());

/// Parameters every strategy starts from for a given seed.
VaeParams initial_params(const VaeArchitecture& arch, std::uint64_t seed);

/// The configured stream for one seed.
ClassIncrementalStream build_stream(const ExperimentConfig& config, std::uint64_t seed);

/// Runs cells on `threads` workers (0 = hardware concurrency). Results come
/// back in the order of `specs`. A summary line per finished cell goes to `log`.
std::vector<CellResult> run_cells(const ExperimentConfig& config, const std::vector<CellSpec>& specs,
                                  std::ostream& log, const StrategyFactory& factory = neural_factory());

/// Header plus rows of every successful cell, without the timestamp line.
std::string csv_body(const std::vector<CellResult>& cells);
/// Writes "# generated <UTC time>" then csv_body.
void write_csv(const std::filesystem::path& path, const std::vector<CellResult>& cells);

struct RunSummary {
  std::vector<CellResult> cells;
  std::vector<std::filesystem::path> files;
  bool all_ok() const;
};

/// Every configured strategy for every seed; writes results.csv.
RunSummary run_experiment(const ExperimentConfig& config, std::ostream& log,
                          const StrategyFactory& factory = neural_factory());

/// bayes-mixture per sigma, a no-KL arm and an ml-plugin reference; writes
/// sigma_sweep_rows.csv and the summary table sigma_sweep.csv.
RunSummary sigma_sweep(const ExperimentConfig& config, std::ostream& log);

/// Held-out codelength of every class c under theta_t for t >= c; writes
/// results.csv and per_class.csv.
RunSummary per_class_tracking(const ExperimentConfig& config, std::ostream& log,
                              const StrategyFactory& factory = neural_factory());

std::string sweep_arm_label(std::optional<double> sigma);

}  // namespace mdlcl
