#include "mdlcl/variational_gap.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mdlcl {

VariationalGap variational_gap_diagnostic(const DiagonalGaussian& q_prev, const DiagonalGaussian& posterior,
                                          const std::function<double(std::span<const double> theta)>& loglik,
                                          std::size_t samples, Rng rng) {
  if (q_prev.dim() != posterior.dim()) throw std::invalid_argument("variational gap: dimension mismatch");
  if (samples == 0) throw std::invalid_argument("variational gap: need at least one sample");

  std::vector<double> log_w(samples);
  std::vector<double> ratio(samples);
  VariationalGap out;
  out.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::vector<double> theta = sample(q_prev, rng);
    log_w[s] = loglik(theta);
    if (std::isnan(log_w[s])) throw std::domain_error("variational gap: log-likelihood is NaN");
    ratio[s] = log_prob(q_prev, theta) - log_prob(posterior, theta);
    out.log_ratio_max = std::max(out.log_ratio_max, std::abs(ratio[s]));
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (!(top >= std::log(1e-300))) throw std::domain_error("variational gap: all importance weights underflow");

  double sum_w = 0.0;
  double sum_wr = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double w = std::exp(log_w[s] - top);
    sum_w += w;
    sum_wr += w * ratio[s];
  }
  out.kl_estimate = sum_wr / sum_w;
  double var = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double w = std::exp(log_w[s] - top) / sum_w;
    var += w * w * (ratio[s] - out.kl_estimate) * (ratio[s] - out.kl_estimate);
  }
  out.standard_error = std::sqrt(var);
  return out;
}

}  // namespace mdlcl
