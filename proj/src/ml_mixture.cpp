#include "mdlcl/ml_mixture.h"

#include <stdexcept>

#include "mdlcl/optim.h"

namespace mdlcl {

ad::Var ml_mixture_objective(ad::Var expected_loglik, GaussianVars q, GaussianVars phi, GaussianVars phi_prev,
                             std::size_t t) {
  if (t < 1) throw std::invalid_argument("ml-mixture step index starts at 1");
  ad::Var objective = expected_loglik - kl_divergence(q, phi);
  if (t > 1) objective = objective - ad::scale(kl_divergence(phi_prev, phi), static_cast<double>(t - 1));
  return objective;
}

MlMixtureFit fit_ml_mixture(const DiagonalGaussian& phi_prev, std::size_t t,
                            const std::function<ad::Var(ad::Var theta)>& loglik, const MlMixtureFitOptions& options,
                            Rng rng) {
  if (options.samples == 0) throw std::invalid_argument("fit_ml_mixture needs at least one sample per step");
  Tensor q_mean = phi_prev.mean_tensor();
  Tensor q_log_std = DiagonalGaussian::around(phi_prev.mean, options.q_init_log_std).log_std_tensor();
  Tensor phi_mean = phi_prev.mean_tensor();
  Tensor phi_log_std = phi_prev.log_std_tensor();
  Adam adam(AdamConfig{.lr = options.lr});
  const double inv_samples = 1.0 / static_cast<double>(options.samples);
  for (std::size_t step = 0; step < options.steps; ++step) {
    if (options.anneal)
      adam.set_lr(options.lr * (1.0 - static_cast<double>(step) / static_cast<double>(options.steps)));
    ad::Tape tape;
    GaussianVars q{tape.leaf(q_mean), tape.leaf(q_log_std)};
    GaussianVars phi{tape.leaf(phi_mean), tape.leaf(phi_log_std)};
    GaussianVars prev = constant_vars(tape, phi_prev);
    ad::Var expected;
    for (std::size_t s = 0; s < options.samples; ++s) {
      ad::Var theta = sample_reparam(q, rng.normal_tensor(q_mean.shape()));
      ad::Var ll = loglik(theta);
      expected = expected.valid() ? ad::add(expected, ll) : ll;
    }
    expected = ad::scale(expected, inv_samples);
    ad::Var loss = ad::neg(ml_mixture_objective(expected, q, phi, prev, t));
    const auto grads = tape.backward(loss);
    adam.step({&q_mean, &q_log_std, &phi_mean, &phi_log_std},
              {grads[q.mean], grads[q.log_std], grads[phi.mean], grads[phi.log_std]});
  }
  return {DiagonalGaussian(phi_mean.values(), phi_log_std.values()),
          DiagonalGaussian(q_mean.values(), q_log_std.values())};
}

}  // namespace mdlcl
