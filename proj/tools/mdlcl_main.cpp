// Command-line front end: experiment runs and self-checks.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "mdlcl/config.h"
#include "mdlcl/experiment.h"
#include "mdlcl/selfcheck.h"

using namespace mdlcl;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string preset = "tiny";
  std::int64_t seed = -1;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c = preset_config(o.preset);
  if (!o.config_path.empty()) c = load_config(o.config_path, c);
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  if (o.seed >= 0) c.seeds = {static_cast<std::uint64_t>(o.seed)};
  validate(c);
  return c;
}

int report(const RunSummary& s) {
  for (const auto& f : s.files) std::cout << "wrote " << f.string() << '\n';
  const auto failed = std::count_if(s.cells.begin(), s.cells.end(), [](const CellResult& c) { return !c.ok; });
  if (failed) std::cout << failed << " of " << s.cells.size() << " cells failed\n";
  return failed ? 1 : 0;
}

int print_checks(const std::vector<CheckResult>& checks) {
  bool ok = true;
  for (const CheckResult& c : checks) {
    std::printf("%-28s error=%.3e tol=%.0e %s\n", c.name.c_str(), c.error, c.tolerance, c.pass() ? "ok" : "FAIL");
    ok = ok && c.pass();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual-learning forgetting measured as description length"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--preset", o.preset, "starting preset")->check(CLI::IsMember(preset_names()));
    sub->add_option("--seed", o.seed, "run this single seed instead of the configured list");
  };
  auto* run = app.add_subcommand("run", "every configured strategy and seed; writes results.csv");
  auto* sweep = app.add_subcommand("sweep-sigma", "bayes-mixture prior scale sweep; writes sigma_sweep.csv");
  auto* per_class = app.add_subcommand("per-class", "held-out codelength per class over time; writes per_class.csv");
  for (auto* sub : {run, sweep, per_class}) add_common(sub);
  auto* grad = app.add_subcommand("grad-check", "finite-difference check of every op and the VAE ELBO");
  auto* oracle = app.add_subcommand("oracle-check", "conjugate strategies against closed forms");
  for (auto* sub : {grad, oracle}) sub->add_option("--seed", o.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; real usage errors share the input-error status.
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*run) return report(run_experiment(resolve(o), std::cout));
    if (*sweep) return report(sigma_sweep(resolve(o), std::cout));
    if (*per_class) return report(per_class_tracking(resolve(o), std::cout));
    const std::uint64_t seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : 1;
    if (*grad) return print_checks(gradient_self_check(seed));
    if (*oracle) return print_checks(oracle_self_check(seed));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
