#include "mdlcl/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

#include "mdlcl/format.h"

namespace mdlcl {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean '" + std::string(v) + "' for " + std::string(key));
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view v) {
  std::vector<T> out;
  for (auto item : split_list(v)) out.push_back(parse_number<T>(key, item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << (i ? "," : "");
    if constexpr (std::is_floating_point_v<T>)
      os << shortest_decimal(xs[i]);
    else
      os << xs[i];
  }
  return os.str();
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"tiny", "mnist"};
  return names;
}

ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig c;
  if (name == "tiny") {
    c.preset = "tiny";
    c.neural.arch = VaeArchitecture::tiny(64);
    c.prototype_spread = 0.15;
    c.neural.epochs = 200;
    c.neural.batch_size = 16;
    c.neural.adam.lr = 1e-3;
    return c;
  }
  if (name == "mnist") {
    c.preset = "mnist";
    c.source = StreamSource::kMnist;
    c.n_classes = 10;
    c.heldout_batches = 10;
    c.heldout_batch_size = 32;
    c.neural.arch = VaeArchitecture::mnist();
    c.neural.epochs = 50;
    c.neural.batch_size = 128;
    c.neural.adam.lr = 1e-3;
    c.seeds = {1};
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  using Setter = std::function<void()>;
  auto size = [&] { return parse_number<std::size_t>(key, v); };
  auto real = [&] { return parse_number<double>(key, v); };
  const std::map<std::string_view, Setter> setters = {
      {"preset", [&] { c = preset_config(v); }},
      {"stream", [&] {
         if (v == "synthetic") c.source = StreamSource::kSynthetic;
         else if (v == "mnist") c.source = StreamSource::kMnist;
         else throw ConfigError("stream must be synthetic or mnist");
       }},
      {"n_classes", [&] { c.n_classes = size(); }},
      {"examples_per_class", [&] { c.examples_per_class = size(); }},
      {"noise_rate", [&] { c.noise_rate = real(); }},
      {"prototype_spread", [&] { c.prototype_spread = real(); }},
      {"input_dim", [&] { c.neural.arch.input_dim = size(); }},
      {"hidden", [&] { c.neural.arch.hidden = parse_list<std::size_t>(key, v); }},
      {"latent_dim", [&] { c.neural.arch.latent_dim = size(); }},
      {"mnist_train_images", [&] { c.mnist_train_images = v; }},
      {"mnist_train_labels", [&] { c.mnist_train_labels = v; }},
      {"mnist_test_images", [&] { c.mnist_test_images = v; }},
      {"mnist_test_labels", [&] { c.mnist_test_labels = v; }},
      {"heldout_from_test", [&] { c.heldout_from_test = parse_bool(key, v); }},
      {"class_order", [&] { c.class_order = parse_list<int>(key, v); }},
      {"heldout_batches", [&] { c.heldout_batches = size(); }},
      {"heldout_batch_size", [&] { c.heldout_batch_size = size(); }},
      {"strategies", [&] {
         c.strategies.clear();
         for (auto s : split_list(v)) c.strategies.push_back(parse_strategy_kind(s));
       }},
      {"seeds", [&] { c.seeds = parse_list<std::uint64_t>(key, v); }},
      {"epochs", [&] { c.neural.epochs = size(); }},
      {"batch_size", [&] { c.neural.batch_size = size(); }},
      {"lr", [&] { c.neural.adam.lr = real(); }},
      {"prior_sigma", [&] { c.neural.prior_sigma = real(); }},
      {"init_log_std", [&] { c.neural.init_log_std = real(); }},
      {"mlm_q_init_log_std", [&] { c.neural.mlm_q_init_log_std = real(); }},
      {"eval_samples", [&] { c.neural.eval_samples = size(); }},
      {"replay_samples", [&] { c.neural.replay_samples = size(); }},
      {"replay_binarize", [&] { c.neural.replay_binarize = parse_bool(key, v); }},
      {"sigma_sweep", [&] { c.sigma_sweep = parse_list<double>(key, v); }},
      {"threads", [&] { c.threads = size(); }},
      {"output_dir", [&] { c.output_dir = v; }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  try {
    it->second();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::string> preset;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = line;
    l = trim(l.substr(0, l.find('#')));
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(trim(l.substr(0, eq)));
    const std::string value(trim(l.substr(eq + 1)));
    if (key == "preset") {
      if (preset) throw ConfigError("preset given twice");
      preset = value;
    } else {
      pairs.emplace_back(key, value);
    }
  }
  ExperimentConfig c = preset ? preset_config(*preset) : base;
  for (const auto& [k, v] : pairs) apply_setting(c, k, v);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, base);
}

void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (c.strategies.empty()) throw ConfigError("strategies must be nonempty");
  if (c.neural.arch.input_dim == 0 || c.neural.arch.latent_dim == 0) throw ConfigError("dimensions must be positive");
  if (c.neural.epochs == 0 || c.neural.batch_size == 0) throw ConfigError("epochs and batch_size must be positive");
  if (c.neural.eval_samples == 0) throw ConfigError("eval_samples must be positive");
  if (!(c.neural.prior_sigma > 0)) throw ConfigError("prior_sigma must be positive");
  if (!(c.neural.adam.lr > 0)) throw ConfigError("lr must be positive");
  if (c.heldout_batches * c.heldout_batch_size == 0) throw ConfigError("held-out batches must be nonempty");
  for (double s : c.sigma_sweep)
    if (!(s > 0)) throw ConfigError("sigma_sweep values must be positive");
  if (c.source == StreamSource::kSynthetic) {
    if (c.n_classes == 0 || c.examples_per_class == 0) throw ConfigError("synthetic stream needs classes and examples");
    if (!(c.noise_rate >= 0 && c.noise_rate < 0.5)) throw ConfigError("noise_rate must lie in [0, 0.5)");
    if (!(c.prototype_spread >= 0 && c.prototype_spread <= 0.5))
      throw ConfigError("prototype_spread must lie in [0, 0.5]");
    if (c.examples_per_class <= c.heldout_batches * c.heldout_batch_size)
      throw ConfigError("examples_per_class must exceed the held-out example count");
  } else {
    if (c.mnist_train_images.empty() || c.mnist_train_labels.empty())
      throw ConfigError("mnist stream needs mnist_train_images and mnist_train_labels");
    if (c.heldout_from_test && (c.mnist_test_images.empty() || c.mnist_test_labels.empty()))
      throw ConfigError("heldout_from_test needs mnist_test_images and mnist_test_labels");
    if (c.neural.arch.input_dim != 784) throw ConfigError("mnist stream needs input_dim = 784");
  }
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  std::vector<std::string> names;
  for (StrategyKind k : c.strategies) names.emplace_back(to_string(k));
  os << "stream = " << (c.source == StreamSource::kSynthetic ? "synthetic" : "mnist") << '\n'
     << "n_classes = " << c.n_classes << '\n'
     << "examples_per_class = " << c.examples_per_class << '\n'
     << "noise_rate = " << shortest_decimal(c.noise_rate) << '\n'
     << "prototype_spread = " << shortest_decimal(c.prototype_spread) << '\n'
     << "input_dim = " << c.neural.arch.input_dim << '\n'
     << "hidden = " << join(c.neural.arch.hidden) << '\n'
     << "latent_dim = " << c.neural.arch.latent_dim << '\n';
  if (!c.mnist_train_images.empty()) os << "mnist_train_images = " << c.mnist_train_images << '\n';
  if (!c.mnist_train_labels.empty()) os << "mnist_train_labels = " << c.mnist_train_labels << '\n';
  if (!c.mnist_test_images.empty()) os << "mnist_test_images = " << c.mnist_test_images << '\n';
  if (!c.mnist_test_labels.empty()) os << "mnist_test_labels = " << c.mnist_test_labels << '\n';
  os << "heldout_from_test = " << (c.heldout_from_test ? "true" : "false") << '\n';
  if (!c.class_order.empty()) os << "class_order = " << join(c.class_order) << '\n';
  os << "heldout_batches = " << c.heldout_batches << '\n'
     << "heldout_batch_size = " << c.heldout_batch_size << '\n'
     << "strategies = " << join(names) << '\n'
     << "seeds = " << join(c.seeds) << '\n'
     << "epochs = " << c.neural.epochs << '\n'
     << "batch_size = " << c.neural.batch_size << '\n'
     << "lr = " << shortest_decimal(c.neural.adam.lr) << '\n'
     << "prior_sigma = " << shortest_decimal(c.neural.prior_sigma) << '\n'
     << "init_log_std = " << shortest_decimal(c.neural.init_log_std) << '\n'
     << "mlm_q_init_log_std = " << shortest_decimal(c.neural.mlm_q_init_log_std) << '\n'
     << "eval_samples = " << c.neural.eval_samples << '\n'
     << "replay_samples = " << c.neural.replay_samples << '\n'
     << "replay_binarize = " << (c.neural.replay_binarize ? "true" : "false") << '\n'
     << "sigma_sweep = " << join(c.sigma_sweep) << '\n'
     << "threads = " << c.threads << '\n'
     << "output_dir = " << c.output_dir << '\n';
  return os.str();
}

}  // namespace mdlcl
