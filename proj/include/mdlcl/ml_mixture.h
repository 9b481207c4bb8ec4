#pragma once

#include <functional>

#include "mdlcl/autodiff.h"
#include "mdlcl/rng.h"
#include "mdlcl/weight_dist.h"

namespace mdlcl {

/// Greedy ML-mixture objective for step t:
///   expected_loglik - KL[q || p(.|phi)] - (t-1) KL[p(.|phi_prev) || p(.|phi)]
/// where `expected_loglik` is a Monte Carlo estimate of E_q[log p(x_t | theta)].
ad::Var ml_mixture_objective(ad::Var expected_loglik, GaussianVars q, GaussianVars phi, GaussianVars phi_prev,
                             std::size_t t);

struct MlMixtureFitOptions {
  std::size_t steps = 4000;
  double lr = 0.02;
  /// theta draws per gradient step.
  std::size_t samples = 32;
  double q_init_log_std = -3.0;
  /// Linearly anneal the learning rate to zero over the run.
  bool anneal = true;
};

struct MlMixtureFit {
  DiagonalGaussian phi;
  DiagonalGaussian q;
};

/// Fits (q_t, phi_t) for a model whose log-likelihood of the step's data is
/// `loglik(theta)`, a scalar on the tape of theta. q_t starts at
/// phi_prev.mean with log-std `q_init_log_std`; phi starts at phi_prev.
MlMixtureFit fit_ml_mixture(const DiagonalGaussian& phi_prev, std::size_t t,
                            const std::function<ad::Var(ad::Var theta)>& loglik, const MlMixtureFitOptions& options,
                            Rng rng);

}  // namespace mdlcl
