#pragma once

#include <memory>
#include <vector>

#include "mdlcl/conjugate.h"
#include "mdlcl/strategy.h"

namespace mdlcl::conjugate {

using SymbolBatch = std::vector<Symbol>;

struct ConjugateConfig {
  std::size_t arity = 2;
  /// Prior for bayes-mixture and vcl, and the starting hyper-prior for
  /// ml-mixture. Empty means Dirichlet(1, ..., 1).
  std::vector<double> prior;
  /// Additive smoothing of ML estimates (ml-plugin, catastrophic).
  double smoothing = 0.0;
  /// Model used before any data is seen by point-estimate kinds. Empty means uniform.
  std::vector<double> first_step_model;
  /// Gradient steps for the ml-mixture hyper-prior fit.
  std::size_t mlm_steps = 3000;
  double mlm_lr = 0.05;
};

/// Log-probability of an ordered symbol sequence under the Dirichlet
/// marginal, i.e. the mixture over categorical parameters.
double log_marginal(const DirichletCategorical& m, std::span<const double> counts);

/// KL[Dir(a) || Dir(b)] in nats.
double dirichlet_kl(const DirichletCategorical& a, const DirichletCategorical& b);

/// Greedy hyper-prior update in the conjugate family. With the exact
/// per-step posterior the first two terms collapse to the log marginal, so
/// the objective is log p(x_t | alpha) - (t-1) KL[Dir(alpha_prev) || Dir(alpha)].
DirichletCategorical ml_mixture_update(const DirichletCategorical& prev, std::span<const Symbol> xs,
                                       std::size_t t, std::size_t steps, double lr);

/// The six prediction strategies over a categorical alphabet.
class ConjugateStrategy final : public Strategy<SymbolBatch> {
 public:
  ConjugateStrategy(StrategyKind kind, ConjugateConfig config);

  StrategyKind kind() const override { return kind_; }
  std::size_t step() const override { return step_; }
  void update(const SymbolBatch& observation) override;
  std::vector<Codelength> encode(const SymbolBatch& x, Rng rng) const override;
  std::vector<std::uint8_t> serialize() const override;
  std::size_t storage_bytes() const override;

  /// Current predictive distribution over the alphabet.
  std::vector<double> predictive() const;
  /// Point parameters (point-estimate kinds) or posterior/hyper-prior pseudo-counts.
  const std::vector<double>& theta() const { return theta_; }
  const DirichletCategorical& belief() const { return belief_; }
  const SymbolBatch& stored() const { return storage_; }

 private:
  StrategyKind kind_;
  ConjugateConfig config_;
  std::size_t step_ = 0;
  std::vector<double> theta_;
  DirichletCategorical belief_;
  SymbolBatch storage_;
};

}  // namespace mdlcl::conjugate
