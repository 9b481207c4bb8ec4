#include "mdlcl/conjugate_strategy.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

#include "mdlcl/optim.h"

namespace mdlcl::conjugate {

namespace {
using boost::math::digamma;

constexpr double kMinLogAlpha = -7.0;  // alpha >= ~1e-3
constexpr double kMaxLogAlpha = 9.0;   // alpha <= ~8e3
}  // namespace

double log_marginal(const DirichletCategorical& m, std::span<const double> counts) {
  if (counts.size() != m.arity()) throw std::invalid_argument("log_marginal: arity mismatch");
  double n = 0.0, lp = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    n += counts[k];
    lp += std::lgamma(m.alphas[k] + counts[k]) - std::lgamma(m.alphas[k]);
  }
  const double a = m.total();
  return lp + std::lgamma(a) - std::lgamma(a + n);
}

double dirichlet_kl(const DirichletCategorical& a, const DirichletCategorical& b) {
  if (a.arity() != b.arity()) throw std::invalid_argument("dirichlet_kl: arity mismatch");
  const double sa = a.total(), sb = b.total();
  double kl = std::lgamma(sa) - std::lgamma(sb);
  const double psa = digamma(sa);
  for (std::size_t k = 0; k < a.arity(); ++k) {
    kl += std::lgamma(b.alphas[k]) - std::lgamma(a.alphas[k]);
    kl += (a.alphas[k] - b.alphas[k]) * (digamma(a.alphas[k]) - psa);
  }
  return std::max(kl, 0.0);
}

DirichletCategorical ml_mixture_update(const DirichletCategorical& prev, std::span<const Symbol> xs,
                                       std::size_t t, std::size_t steps, double lr) {
  if (t < 1) throw std::invalid_argument("ml_mixture_update: step index starts at 1");
  const std::size_t k_count = prev.arity();
  const auto counts = symbol_counts(xs, k_count);
  double n = 0.0;
  for (double c : counts) n += c;
  const double anchor = static_cast<double>(t - 1);
  const double psa_prev = digamma(prev.total());

  Tensor u({k_count});
  for (std::size_t k = 0; k < k_count; ++k)
    u[k] = std::clamp(std::log(prev.alphas[k]), kMinLogAlpha, kMaxLogAlpha);
  Adam adam(AdamConfig{.lr = lr});
  for (std::size_t s = 0; s < steps; ++s) {
    double a_sum = 0.0;
    std::vector<double> alpha(k_count);
    for (std::size_t k = 0; k < k_count; ++k) a_sum += alpha[k] = std::exp(u[k]);
    const double common = digamma(a_sum) - digamma(a_sum + n) + anchor * digamma(a_sum);
    Tensor grad({k_count});
    for (std::size_t k = 0; k < k_count; ++k) {
      const double d_marginal = digamma(alpha[k] + counts[k]) - digamma(alpha[k]);
      const double d_anchor = digamma(alpha[k]) - digamma(prev.alphas[k]) + psa_prev;
      // Ascent direction, so the descent step receives the negation.
      grad[k] = -alpha[k] * (common + d_marginal - anchor * d_anchor);
    }
    adam.step({&u}, {grad});
    for (std::size_t k = 0; k < k_count; ++k) u[k] = std::clamp(u[k], kMinLogAlpha, kMaxLogAlpha);
  }
  std::vector<double> alpha(k_count);
  for (std::size_t k = 0; k < k_count; ++k) alpha[k] = std::exp(u[k]);
  return DirichletCategorical(std::move(alpha));
}

ConjugateStrategy::ConjugateStrategy(StrategyKind kind, ConjugateConfig config)
    : kind_(kind), config_(std::move(config)) {
  if (config_.arity < 2) throw std::invalid_argument("alphabet needs at least two symbols");
  if (config_.prior.empty()) config_.prior.assign(config_.arity, 1.0);
  if (config_.first_step_model.empty())
    config_.first_step_model.assign(config_.arity, 1.0 / static_cast<double>(config_.arity));
  if (config_.prior.size() != config_.arity || config_.first_step_model.size() != config_.arity)
    throw std::invalid_argument("prior and first-step model must match the alphabet size");
  check_probability_vector(config_.first_step_model);
  belief_ = DirichletCategorical(config_.prior);
  theta_ = config_.first_step_model;
}

void ConjugateStrategy::update(const SymbolBatch& obs) {
  // Validates symbols before any state changes.
  const auto counts = symbol_counts(obs, config_.arity);
  const std::size_t t = step_ + 1;
  switch (kind_) {
    case StrategyKind::kMlPlugin: {
      storage_.insert(storage_.end(), obs.begin(), obs.end());
      if (!storage_.empty()) theta_ = smoothed_mle(symbol_counts(storage_, config_.arity), config_.smoothing);
      break;
    }
    case StrategyKind::kBayesMixture:
      storage_.insert(storage_.end(), obs.begin(), obs.end());
      belief_ = posterior_update(DirichletCategorical(config_.prior), storage_);
      break;
    case StrategyKind::kVcl:
      // The variational family is the conjugate family, so the KL projection is exact.
      belief_ = posterior_update(belief_, obs);
      break;
    case StrategyKind::kReplay:
      theta_ = exact_replay_update(theta_, obs, t);
      break;
    case StrategyKind::kMlMixture:
      if (!obs.empty()) belief_ = ml_mixture_update(belief_, obs, t, config_.mlm_steps, config_.mlm_lr);
      break;
    case StrategyKind::kCatastrophic:
      if (!obs.empty()) theta_ = smoothed_mle(counts, config_.smoothing);
      break;
  }
  step_ = t;
}

std::vector<double> ConjugateStrategy::predictive() const {
  if (is_point_estimate(kind_)) return theta_;
  std::vector<double> p(config_.arity);
  const double a = belief_.total();
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = belief_.alphas[k] / a;
  return p;
}

std::vector<Codelength> ConjugateStrategy::encode(const SymbolBatch& x, Rng) const {
  const auto p = predictive();
  std::vector<Codelength> out;
  out.reserve(x.size());
  for (Symbol s : x) {
    if (s < 0 || static_cast<std::size_t>(s) >= p.size()) throw std::out_of_range("symbol outside alphabet");
    out.push_back(Codelength::from_probability(p[static_cast<std::size_t>(s)]));
  }
  return out;
}

std::vector<std::uint8_t> ConjugateStrategy::serialize() const {
  std::ostringstream desc;
  desc << "conjugate arity=" << config_.arity << " smoothing=" << config_.smoothing;
  BinaryWriter w;
  write_strategy_header(w, {kind_, step_, fingerprint(desc.str())});
  w.doubles(is_point_estimate(kind_) ? theta_ : belief_.alphas);
  w.u64(storage_.size());
  for (Symbol s : storage_) w.i32(s);
  return w.take();
}

std::size_t ConjugateStrategy::storage_bytes() const { return storage_.size() * sizeof(std::int32_t); }

}  // namespace mdlcl::conjugate
