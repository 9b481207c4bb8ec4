#include "mdlcl/conjugate.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mdlcl::conjugate {

namespace {
void check_symbol(Symbol x, std::size_t arity) {
  if (x < 0 || static_cast<std::size_t>(x) >= arity)
    throw std::out_of_range("symbol " + std::to_string(x) + " outside alphabet of size " + std::to_string(arity));
}
}  // namespace

BetaBernoulli::BetaBernoulli(double a, double b) : alpha(a), beta(b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::domain_error("Beta pseudo-counts must be positive");
}

DirichletCategorical::DirichletCategorical(std::vector<double> a) : alphas(std::move(a)) {
  if (alphas.size() < 2) throw std::domain_error("Dirichlet needs at least two categories");
  for (double v : alphas)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("Dirichlet pseudo-counts must be positive");
}

DirichletCategorical DirichletCategorical::uniform(std::size_t arity) {
  return DirichletCategorical(std::vector<double>(arity, 1.0));
}

double DirichletCategorical::total() const { return std::accumulate(alphas.begin(), alphas.end(), 0.0); }

DirichletCategorical to_dirichlet(const BetaBernoulli& m) { return DirichletCategorical({m.beta, m.alpha}); }

std::vector<double> symbol_counts(std::span<const Symbol> xs, std::size_t arity) {
  std::vector<double> counts(arity, 0.0);
  for (Symbol x : xs) {
    check_symbol(x, arity);
    counts[static_cast<std::size_t>(x)] += 1.0;
  }
  return counts;
}

BetaBernoulli posterior_update(BetaBernoulli m, std::span<const Symbol> xs) {
  const auto counts = symbol_counts(xs, 2);
  return BetaBernoulli(m.alpha + counts[1], m.beta + counts[0]);
}

DirichletCategorical posterior_update(DirichletCategorical m, std::span<const Symbol> xs) {
  const auto counts = symbol_counts(xs, m.arity());
  for (std::size_t k = 0; k < counts.size(); ++k) m.alphas[k] += counts[k];
  return m;
}

double bayes_mixture_predict(const BetaBernoulli& m, Symbol x) {
  check_symbol(x, 2);
  return (x == 1 ? m.alpha : m.beta) / (m.alpha + m.beta);
}

double bayes_mixture_predict(const DirichletCategorical& m, Symbol x) {
  check_symbol(x, m.arity());
  return m.alphas[static_cast<std::size_t>(x)] / m.total();
}

Codelength prequential_codelength_exact(std::span<const Symbol> xs, const BetaBernoulli& prior) {
  return prequential_codelength_exact(xs, to_dirichlet(prior));
}

Codelength prequential_codelength_exact(std::span<const Symbol> xs, const DirichletCategorical& prior) {
  if (xs.empty()) throw std::invalid_argument("prequential codelength of an empty sequence");
  DirichletCategorical m = prior;
  Codelength total;
  for (Symbol x : xs) {
    total += Codelength::from_probability(bayes_mixture_predict(m, x));
    m.alphas[static_cast<std::size_t>(x)] += 1.0;
  }
  return total;
}

std::vector<double> smoothed_mle(std::span<const double> counts, double smoothing) {
  if (!(smoothing >= 0.0)) throw std::domain_error("smoothing must be non-negative");
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double denom = n + smoothing * static_cast<double>(counts.size());
  if (!(denom > 0.0)) throw std::domain_error("maximum likelihood estimate of no data");
  std::vector<double> theta(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) theta[k] = (counts[k] + smoothing) / denom;
  return theta;
}

void check_probability_vector(std::span<const double> p) {
  if (p.size() < 2) throw std::domain_error("probability vector needs at least two entries");
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::domain_error("probability entry outside [0,1]");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::domain_error("probability vector sums to " + std::to_string(s));
}

Codelength ml_plugin_codelength(std::span<const Symbol> xs, double smoothing,
                                std::span<const double> first_step_model) {
  check_probability_vector(first_step_model);
  if (!(smoothing >= 0.0)) throw std::domain_error("smoothing must be non-negative");
  const std::size_t arity = first_step_model.size();
  std::vector<double> counts(arity, 0.0);
  Codelength total;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    check_symbol(xs[t], arity);
    const auto k = static_cast<std::size_t>(xs[t]);
    const double p = t == 0 ? first_step_model[k] : smoothed_mle(counts, smoothing)[k];
    total += Codelength::from_probability(p);
    counts[k] += 1.0;
  }
  return total;
}

std::vector<double> exact_replay_update(std::span<const double> theta_prev, std::span<const Symbol> xs,
                                        std::size_t t) {
  check_probability_vector(theta_prev);
  if (t < 1) throw std::invalid_argument("replay step index starts at 1");
  if (xs.empty()) return {theta_prev.begin(), theta_prev.end()};
  auto weights = symbol_counts(xs, theta_prev.size());
  // Gibbs' inequality: sum_k w_k log theta_k is maximized at theta = w / sum(w).
  const double history = static_cast<double>(t - 1) * static_cast<double>(xs.size());
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k] += history * theta_prev[k];
    total += weights[k];
  }
  for (double& w : weights) w /= total;
  return weights;
}

}  // namespace mdlcl::conjugate
