#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mdlcl/neural_strategy.h"
#include "mdlcl/strategy.h"

namespace mdlcl {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StreamSource { kSynthetic, kMnist };

struct ExperimentConfig {
  std::string preset = "tiny";
  StreamSource source = StreamSource::kSynthetic;

  // synthetic stream
  std::size_t n_classes = 6;
  std::size_t examples_per_class = 128;
  double noise_rate = 0.1;
  /// Per-pixel probability that a class prototype differs from the shared base; 0.5 = independent classes.
  double prototype_spread = 0.5;

  // MNIST stream
  std::string mnist_train_images;
  std::string mnist_train_labels;
  std::string mnist_test_images;
  std::string mnist_test_labels;
  /// Draw held-out batches from the test split instead of the training split.
  bool heldout_from_test = false;

  /// Empty means 0..n-1.
  std::vector<int> class_order;
  std::size_t heldout_batches = 5;
  std::size_t heldout_batch_size = 16;

  std::vector<StrategyKind> strategies = all_strategy_kinds();
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  NeuralConfig neural;
  std::vector<double> sigma_sweep = {0.01, 0.1, 1.0, 10.0};
  /// Worker threads; 0 means one per hardware thread.
  std::size_t threads = 0;
  std::string output_dir = "results";

  std::size_t input_dim() const { return neural.arch.input_dim; }
};

/// "tiny" (synthetic desk-scale stream) or "mnist".
ExperimentConfig preset_config(std::string_view name);
const std::vector<std::string>& preset_names();

/// Applies one `key = value` setting. Throws ConfigError on unknown keys or
/// malformed values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines ('#' starts a comment). A `preset` key, if
/// present, selects the starting point before the other keys are applied;
/// otherwise `base` is used.
ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base);
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base);

/// Throws ConfigError if the config cannot run.
void validate(const ExperimentConfig& config);

/// Every setting in the format parse_config reads.
std::string to_config_text(const ExperimentConfig& config);

}  // namespace mdlcl
