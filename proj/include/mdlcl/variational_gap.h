#pragma once

#include <functional>
#include <span>

#include "mdlcl/rng.h"
#include "mdlcl/weight_dist.h"

namespace mdlcl {

struct VariationalGap {
  /// Mean of log(q_prev / posterior) under q_prev(theta) p(x_t | theta), self-normalized, nats.
  double kl_estimate = 0.0;
  /// Largest |log(q_prev / posterior)| over the drawn samples, nats.
  double log_ratio_max = 0.0;
  /// Delta-method standard error of `kl_estimate`.
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo probe of the error made by substituting `q_prev` for the exact
/// posterior `posterior` when updating on a new observation with
/// log-likelihood `loglik(theta)` (nats). Draws `samples` thetas from q_prev
/// and reweights them by the likelihood.
///
/// Throws std::domain_error when every importance weight is below 1e-300.
VariationalGap variational_gap_diagnostic(const DiagonalGaussian& q_prev, const DiagonalGaussian& posterior,
                                          const std::function<double(std::span<const double> theta)>& loglik,
                                          std::size_t samples, Rng rng);

}  // namespace mdlcl
