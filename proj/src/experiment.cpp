#include "mdlcl/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mdlcl/format.h"
#include "mdlcl/idx.h"

namespace mdlcl {

StrategyFactory neural_factory() {
  return [](StrategyKind kind, const NeuralConfig& config, const VaeParams& init, Rng rng) {
    return std::unique_ptr<TensorStrategy>(make_neural_strategy(kind, config, init, rng));
  };
}

VaeParams initial_params(const VaeArchitecture& arch, std::uint64_t seed) {
  Rng rng = Rng(seed).split("init");
  return VaeParams::initialize(arch, rng);
}

namespace {

double mean_bits(const std::vector<Codelength>& parts) {
  return (total(parts) / static_cast<double>(parts.size())).bits();
}

}  // namespace

CellResult run_cell(const ClassIncrementalStream& stream, const CellSpec& spec, const StrategyFactory& factory) {
  CellResult out;
  out.spec = spec;
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::size_t dim = stream.input_dim;
    if (dim != spec.neural.arch.input_dim) throw std::invalid_argument("stream and model disagree on input_dim");
    const VaeParams init = initial_params(spec.neural.arch, spec.seed);
    const Rng root(spec.seed);
    auto strategy = factory(spec.kind, spec.neural, init, root.split("strategy"));
    const Rng preq_eval = root.split("preq-eval");
    const Rng heldout_eval = root.split("heldout-eval");
    const std::size_t S = spec.neural.eval_samples;
    ForgettingLedger ledger;
    auto row = [&](std::size_t step, int label, std::string metric, double value, std::string unit) {
      out.rows.push_back({spec.label, spec.seed, step, label, std::move(metric), value, std::move(unit)});
    };

    for (std::size_t t = 1; t <= stream.size(); ++t) {
      const Observation& obs = stream.steps[t - 1];
      std::vector<Codelength> bits;
      if (t == 1) {
        for (double b : codelength(obs.examples, init, preq_eval.split(t), S)) bits.emplace_back(b);
      } else {
        bits = strategy->encode(obs.examples, preq_eval.split(t));
      }
      CodelengthRecord rec{t, obs.class_label, spec.kind, EvalKind::kPrequentialNext, total(bits), bits.size(), dim};
      out.prequential.push_back(rec);
      row(t, obs.class_label, "preq_bits", rec.total_bits.bits(), "bits");
      row(t, obs.class_label, "preq_bpd", rec.bpd(), "bpd");

      strategy->update(obs.examples);

      std::vector<double> held(t);
      for (std::size_t i = 1; i <= t; ++i) {
        const int label = stream.steps[i - 1].class_label;
        const Codelength now(mean_bits(strategy->encode(stream.heldout[i - 1], heldout_eval.split(i))));
        if (i == t) {
          ledger.record_baseline(i, now);
          row(t, label, "baseline_bits", now.bits(), "bits");
        }
        ledger.record_current(i, now);
        held[i - 1] = now.bits();
        row(t, label, "heldout_bits", now.bits(), "bits");
        row(t, label, "forgetting_bpd", ledger.class_forgetting(i).bits() / static_cast<double>(dim), "bpd");
      }
      out.heldout_bits.push_back(std::move(held));
      out.cum_forget_bpd.push_back(cumulative_average_forgetting(ledger, t, dim));
      row(t, obs.class_label, "cum_forget_bpd", out.cum_forget_bpd.back(), "bpd");
    }
    out.prequential_bpd = prequential_total(out.prequential);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ClassIncrementalStream build_stream(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.source == StreamSource::kSynthetic) {
    const SyntheticData data =
        synthetic_data(c.n_classes, c.examples_per_class, c.neural.arch.input_dim, c.noise_rate, seed, c.prototype_spread);
    std::vector<int> order = c.class_order;
    if (order.empty()) {
      order.resize(c.n_classes);
      std::iota(order.begin(), order.end(), 0);
    }
    return class_incremental(data.examples, data.labels, order, c.heldout_batches, c.heldout_batch_size, seed);
  }
  const LabeledImages train = load_idx(c.mnist_train_images, c.mnist_train_labels);
  std::vector<int> order = c.class_order;
  if (order.empty()) {
    order.resize(c.n_classes);
    std::iota(order.begin(), order.end(), 0);
  }
  if (c.heldout_from_test) {
    const LabeledImages test = load_idx(c.mnist_test_images, c.mnist_test_labels);
    return class_incremental(train.examples, train.labels, test.examples, test.labels, order, c.heldout_batches,
                             c.heldout_batch_size, seed);
  }
  return class_incremental(train.examples, train.labels, order, c.heldout_batches, c.heldout_batch_size, seed);
}

std::vector<CellResult> run_cells(const ExperimentConfig& config, const std::vector<CellSpec>& specs,
                                  std::ostream& log, const StrategyFactory& factory) {
  std::map<std::uint64_t, ClassIncrementalStream> streams;
  for (const CellSpec& s : specs)
    if (!streams.contains(s.seed)) streams.emplace(s.seed, build_stream(config, s.seed));

  std::vector<CellResult> results(specs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      results[i] = run_cell(streams.at(specs[i].seed), specs[i], factory);
      const CellResult& r = results[i];
      std::lock_guard lock(log_mutex);
      char buf[256];
      if (r.ok) {
        std::snprintf(buf, sizeof buf, "cell %s seed=%llu ok preq_bpd=%.4f final_cum_forget_bpd=%.4f time=%.1fs",
                      r.spec.label.c_str(), static_cast<unsigned long long>(r.spec.seed), r.prequential_bpd,
                      r.cum_forget_bpd.back(), r.seconds);
      } else {
        std::snprintf(buf, sizeof buf, "cell %s seed=%llu FAILED: %s", r.spec.label.c_str(),
                      static_cast<unsigned long long>(r.spec.seed), r.error.c_str());
      }
      log << buf << std::endl;
    }
  };
  std::size_t n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, specs.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return results;
}

namespace {

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return shortest_decimal(v);
}

std::string timestamp_line() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "# generated %Y-%m-%dT%H:%M:%SZ\n", &tm);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::vector<CellSpec> grid(const ExperimentConfig& c) {
  std::vector<CellSpec> specs;
  for (StrategyKind k : c.strategies)
    for (std::uint64_t seed : c.seeds) specs.push_back({std::string(to_string(k)), k, c.neural, seed});
  return specs;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string csv_body(const std::vector<CellResult>& cells) {
  std::string out = "strategy,seed,step,class,metric,value,unit\n";
  for (const CellResult& c : cells) {
    if (!c.ok) continue;
    for (const ResultRow& r : c.rows) {
      out += r.strategy + ',' + std::to_string(r.seed) + ',' + std::to_string(r.step) + ',' +
             std::to_string(r.class_label) + ',' + r.metric + ',' + format_value(r.value) + ',' + r.unit + '\n';
    }
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<CellResult>& cells) {
  write_text(path, timestamp_line() + csv_body(cells));
}

bool RunSummary::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

RunSummary run_experiment(const ExperimentConfig& config, std::ostream& log, const StrategyFactory& factory) {
  validate(config);
  RunSummary s;
  s.cells = run_cells(config, grid(config), log, factory);
  const auto path = std::filesystem::path(config.output_dir) / "results.csv";
  write_csv(path, s.cells);
  s.files.push_back(path);
  return s;
}

std::string sweep_arm_label(std::optional<double> sigma) {
  if (!sigma) return "bayes-mixture/none";
  std::ostringstream os;
  os << "bayes-mixture/sigma=" << *sigma;
  return os.str();
}

RunSummary sigma_sweep(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  if (config.sigma_sweep.size() < 3) throw ConfigError("sigma sweep needs at least 3 values");
  std::vector<CellSpec> specs;
  std::vector<std::pair<std::string, std::string>> arms;  // label, sigma column
  for (double sigma : config.sigma_sweep) {
    NeuralConfig n = config.neural;
    n.prior_sigma = sigma;
    const std::string label = sweep_arm_label(sigma);
    arms.emplace_back(label, format_value(sigma));
    for (std::uint64_t seed : config.seeds) specs.push_back({label, StrategyKind::kBayesMixture, n, seed});
  }
  NeuralConfig none = config.neural;
  none.prior_kl = false;
  arms.emplace_back(sweep_arm_label(std::nullopt), "none");
  for (std::uint64_t seed : config.seeds)
    specs.push_back({sweep_arm_label(std::nullopt), StrategyKind::kBayesMixture, none, seed});
  arms.emplace_back("ml-plugin", "reference");
  for (std::uint64_t seed : config.seeds) specs.push_back({"ml-plugin", StrategyKind::kMlPlugin, config.neural, seed});

  RunSummary s;
  s.cells = run_cells(config, specs, log, neural_factory());
  const std::filesystem::path dir = config.output_dir;
  write_csv(dir / "sigma_sweep_rows.csv", s.cells);

  std::string table = timestamp_line() + "arm,sigma,seed,preq_bpd\n";
  for (const auto& [label, sigma] : arms) {
    std::vector<double> values;
    for (const CellResult& c : s.cells) {
      if (c.spec.label != label || !c.ok) continue;
      values.push_back(c.prequential_bpd);
      table += label + ',' + sigma + ',' + std::to_string(c.spec.seed) + ',' + format_value(c.prequential_bpd) + '\n';
    }
    if (!values.empty()) table += label + ',' + sigma + ",median," + format_value(median(values)) + '\n';
  }
  write_text(dir / "sigma_sweep.csv", table);
  s.files = {dir / "sigma_sweep_rows.csv", dir / "sigma_sweep.csv"};
  return s;
}

RunSummary per_class_tracking(const ExperimentConfig& config, std::ostream& log, const StrategyFactory& factory) {
  RunSummary s = run_experiment(config, log, factory);
  std::string table = timestamp_line() + "strategy,seed,class_step,class,step,heldout_bits\n";
  for (const CellResult& c : s.cells) {
    if (!c.ok) continue;
    std::map<std::size_t, int> label_of;
    for (const CodelengthRecord& r : c.prequential) label_of[r.step] = r.class_label;
    const std::size_t T = c.heldout_bits.size();
    for (std::size_t cls = 1; cls <= T; ++cls)
      for (std::size_t t = cls; t <= T; ++t)
        table += c.spec.label + ',' + std::to_string(c.spec.seed) + ',' + std::to_string(cls) + ',' +
                 std::to_string(label_of[cls]) + ',' + std::to_string(t) + ',' +
                 format_value(c.heldout_bits[t - 1][cls - 1]) + '\n';
  }
  const auto path = std::filesystem::path(config.output_dir) / "per_class.csv";
  write_text(path, table);
  s.files.push_back(path);
  return s;
}

}  // namespace mdlcl
