#pragma once

// Beta-Bernoulli and Dirichlet-categorical families. Every prediction
// strategy has a closed form here, which makes them the reference layer for
// checking the strategy implementations.

#include <span>
#include <vector>

#include "mdlcl/codelength.h"

namespace mdlcl::conjugate {

using Symbol = int;

struct BetaBernoulli {
  double alpha = 1.0;  // pseudo-count of symbol 1
  double beta = 1.0;   // pseudo-count of symbol 0

  BetaBernoulli() = default;
  BetaBernoulli(double alpha, double beta);
  bool operator==(const BetaBernoulli&) const = default;
};

struct DirichletCategorical {
  std::vector<double> alphas;

  DirichletCategorical() = default;
  explicit DirichletCategorical(std::vector<double> alphas);
  static DirichletCategorical uniform(std::size_t arity);

  std::size_t arity() const { return alphas.size(); }
  double total() const;
  bool operator==(const DirichletCategorical&) const = default;
};

DirichletCategorical to_dirichlet(const BetaBernoulli& m);

std::vector<double> symbol_counts(std::span<const Symbol> xs, std::size_t arity);

BetaBernoulli posterior_update(BetaBernoulli m, std::span<const Symbol> xs);
DirichletCategorical posterior_update(DirichletCategorical m, std::span<const Symbol> xs);

/// Posterior predictive probability of the next symbol.
double bayes_mixture_predict(const BetaBernoulli& m, Symbol x);
double bayes_mixture_predict(const DirichletCategorical& m, Symbol x);

/// Sum over t of -log2 p(x_t | x^{t-1}) under sequential Bayesian prediction.
Codelength prequential_codelength_exact(std::span<const Symbol> xs, const BetaBernoulli& prior = {});
Codelength prequential_codelength_exact(std::span<const Symbol> xs, const DirichletCategorical& prior);

/// (counts + smoothing) / (n + K * smoothing). Requires n > 0 when smoothing == 0.
std::vector<double> smoothed_mle(std::span<const double> counts, double smoothing);

/// ML plug-in prequential codelength. x_1 is coded with `first_step_model`,
/// later symbols with the smoothed MLE of the prefix. A zero-probability
/// symbol makes the total infinite.
Codelength ml_plugin_codelength(std::span<const Symbol> xs, double smoothing,
                                std::span<const double> first_step_model);

/// Closed-form generative-replay update for a categorical model:
/// argmax_theta  log p(x_t|theta) + (t-1) E_{x ~ theta_prev}[log p(x|theta)],
/// where x ranges over observations of the same size as x_t.
std::vector<double> exact_replay_update(std::span<const double> theta_prev, std::span<const Symbol> xs,
                                        std::size_t t);

/// Throws unless p is a probability vector (non-negative, sums to 1).
void check_probability_vector(std::span<const double> p);

}  // namespace mdlcl::conjugate
