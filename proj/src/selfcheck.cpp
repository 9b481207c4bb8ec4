#include "mdlcl/selfcheck.h"

#include <cmath>
#include <functional>

#include "mdlcl/autodiff.h"
#include "mdlcl/conjugate.h"
#include "mdlcl/conjugate_strategy.h"
#include "mdlcl/vae.h"

namespace mdlcl {

namespace {

using UnaryLoss = std::function<ad::Var(ad::Tape&, ad::Var)>;

struct OpCase {
  std::string name;
  Shape shape;
  UnaryLoss f;
  double shift = 0.0;  // added to the random point, to stay inside a domain
};

std::vector<OpCase> op_cases(const Tensor& other, const Tensor& weight, const Tensor& row) {
  using namespace ad;
  return {
      {"add", {3, 4}, [=](Tape& t, Var x) { return sum(square(add(x, t.constant(other)))); }},
      {"sub", {3, 4}, [=](Tape& t, Var x) { return sum(square(sub(t.constant(other), x))); }},
      {"mul", {3, 4}, [=](Tape& t, Var x) { return sum(mul(x, mul(x, t.constant(other)))); }},
      {"matmul", {3, 4}, [=](Tape& t, Var x) { return sum(square(matmul(x, t.constant(weight)))); }},
      {"sigmoid", {3, 4}, [](Tape&, Var x) { return sum(mul(sigmoid(x), x)); }},
      {"tanh", {3, 4}, [](Tape&, Var x) { return sum(mul(tanh(x), x)); }},
      {"softplus", {3, 4}, [](Tape&, Var x) { return sum(mul(softplus(x), x)); }},
      {"exp", {3, 4}, [](Tape&, Var x) { return sum(exp(x)); }},
      {"log", {3, 4}, [](Tape&, Var x) { return sum(mul(log(x), x)); }, 2.5},
      {"square", {3, 4}, [](Tape&, Var x) { return sum(square(square(x))); }},
      {"sum", {3, 4}, [](Tape&, Var x) { return square(sum(x)); }},
      {"mean", {3, 4}, [](Tape&, Var x) { return square(mean(x)); }},
      {"add_rowvector", {4}, [=](Tape& t, Var b) { return sum(square(add_rowvector(t.constant(other), b))); }},
      {"scale", {3, 4}, [](Tape&, Var x) { return sum(square(scale(x, -1.7))); }},
      {"add_scalar", {3, 4}, [](Tape&, Var x) { return sum(square(add_scalar(x, 0.3))); }},
      {"slice", {3, 4}, [](Tape&, Var x) { return sum(square(slice(x, 2, {2, 3}))); }},
      {"sum_rows", {3, 4}, [=](Tape& t, Var x) { return sum(mul(square(sum_rows(x)), t.constant(row))); }},
  };
}

}  // namespace

std::vector<CheckResult> gradient_self_check(std::uint64_t seed, std::size_t points) {
  Rng rng = Rng(seed).split("grad-check");
  std::vector<CheckResult> out;
  const Tensor other = rng.normal_tensor({3, 4});
  const Tensor weight = rng.normal_tensor({4, 2});
  const Tensor row = rng.normal_tensor({3, 1});
  for (const OpCase& c : op_cases(other, weight, row)) {
    CheckResult r{c.name, 0.0, 1e-4};
    for (std::size_t p = 0; p < points; ++p) {
      Tensor x = rng.normal_tensor(c.shape);
      for (double& v : x.data()) v = c.shift > 0 ? c.shift + 0.5 * v : v;
      r.error = std::max(r.error, ad::grad_check(c.f, x, 1e-5));
    }
    out.push_back(r);
  }

  const VaeArchitecture arch{5, {6}, 2};
  CheckResult elbo_check{"vae elbo", 0.0, 1e-4};
  for (std::size_t p = 0; p < points; ++p) {
    Rng prng = rng.split(p);
    VaeParams params = VaeParams::initialize(arch, prng);
    Tensor x({3, arch.input_dim});
    for (double& v : x.data()) v = prng.uniform();
    const Tensor noise = prng.normal_tensor({3, arch.latent_dim});
    const std::size_t n_enc = params.encoder.size();
    for (std::size_t k = 0; k < n_enc + params.decoder.size(); ++k) {
      auto f = [&](ad::Tape& tape, ad::Var v) {
        auto enc = constants(tape, params.encoder);
        auto dec = constants(tape, params.decoder);
        (k < n_enc ? enc[k] : dec[k - n_enc]) = v;
        return ad::sum(elbo_rows(tape.constant(x), enc, dec, noise, arch));
      };
      const Tensor& point = k < n_enc ? params.encoder[k] : params.decoder[k - n_enc];
      elbo_check.error = std::max(elbo_check.error, ad::grad_check(f, point, 1e-5));
    }
  }
  out.push_back(elbo_check);
  return out;
}

std::vector<CheckResult> oracle_self_check(std::uint64_t seed) {
  Rng rng = Rng(seed).split("oracle-check");
  std::vector<CheckResult> out;

  CheckResult marginal{"beta marginal", 0.0, 1e-9};
  CheckResult vcl{"vcl vs exact", 0.0, 1e-6};
  CheckResult mixture{"bayes-mixture vs exact", 0.0, 1e-6};
  for (int s = 0; s < 200; ++s) {
    const std::size_t n = 1 + rng.below(20);
    const double p = rng.uniform();
    std::vector<conjugate::Symbol> xs(n);
    for (auto& x : xs) x = rng.uniform() < p ? 1 : 0;
    double ones = 0;
    for (auto x : xs) ones += x;
    const double log_marg = std::lgamma(ones + 1) + std::lgamma(n - ones + 1) - std::lgamma(n + 2.0);
    const double exact = conjugate::prequential_codelength_exact(xs).finite_bits();
    marginal.error = std::max(marginal.error, std::abs(exact + log_marg / std::log(2.0)));

    conjugate::ConjugateStrategy v(StrategyKind::kVcl, {});
    conjugate::ConjugateStrategy b(StrategyKind::kBayesMixture, {});
    conjugate::BetaBernoulli belief;
    for (auto x : xs) {
      const double want = -std::log2(conjugate::bayes_mixture_predict(belief, x));
      const conjugate::SymbolBatch one = {x};
      vcl.error = std::max(vcl.error, std::abs(v.encode(one, rng)[0].finite_bits() - want));
      mixture.error = std::max(mixture.error, std::abs(b.encode(one, rng)[0].finite_bits() - want));
      v.update(one);
      b.update(one);
      belief = conjugate::posterior_update(belief, one);
    }
  }
  out.push_back(marginal);
  out.push_back(vcl);
  out.push_back(mixture);

  // Replay closed form against a grid search of its objective on the binary simplex.
  CheckResult replay{"replay vs grid", 0.0, 1e-3};
  for (int s = 0; s < 20; ++s) {
    const double prev = 0.05 + 0.9 * rng.uniform();
    const std::size_t t = 1 + rng.below(6);
    std::vector<conjugate::Symbol> xs(1 + rng.below(10));
    for (auto& x : xs) x = rng.uniform() < 0.5 ? 1 : 0;
    double ones = 0;
    for (auto x : xs) ones += x;
    const double n = static_cast<double>(xs.size());
    const double w = static_cast<double>(t - 1) * n;
    double best = 0, best_obj = -INFINITY;
    for (int g = 1; g < 200000; ++g) {
      const double th = g / 200000.0;
      const double obj = (ones + w * prev) * std::log(th) + (n - ones + w * (1 - prev)) * std::log(1 - th);
      if (obj > best_obj) best_obj = obj, best = th;
    }
    const std::vector<double> theta_prev = {1 - prev, prev};
    const auto got = conjugate::exact_replay_update(theta_prev, xs, t);
    replay.error = std::max(replay.error, std::abs(got[1] - best));
  }
  out.push_back(replay);
  return out;
}

}  // namespace mdlcl
