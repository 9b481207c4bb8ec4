#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mdlcl/optim.h"
#include "mdlcl/strategy.h"
#include "mdlcl/vae.h"
#include "mdlcl/weight_dist.h"

namespace mdlcl {

struct NeuralConfig {
  VaeArchitecture arch = VaeArchitecture::tiny();
  /// Passes over the step's training set per update, the same for every strategy.
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  AdamConfig adam{};
  /// Standard deviation of the N(0, sigma^2 I) weight prior.
  double prior_sigma = 0.1;
  /// When false the KL term of the weight posterior is dropped (the "none" arm).
  bool prior_kl = true;
  /// Starting log-std of weight posteriors on their first fit.
  double init_log_std = -3.0;
  /// Starting log-std of the per-step ml-mixture posterior.
  double mlm_q_init_log_std = -3.0;
  /// Monte Carlo samples per encode.
  std::size_t eval_samples = 16;
  /// Pseudo-examples drawn per replay update; 0 means as many as the observation has.
  std::size_t replay_samples = 0;
  bool replay_binarize = false;

  std::string description() const;
};

/// Per-update training record, for inspection and tests.
struct UpdateDiagnostics {
  std::vector<double> epoch_losses;  // mean per-example objective, nats
  double anchor_kl = 0.0;            // KL to the prior / previous posterior / previous hyper-prior
};

/// Shared state of the VAE-backed strategies.
class NeuralStrategy : public Strategy<Tensor> {
 public:
  StrategyKind kind() const override { return kind_; }
  std::size_t step() const override { return step_; }
  std::size_t storage_bytes() const override;

  const NeuralConfig& config() const { return config_; }
  /// Encoder and (for point kinds) decoder parameters. Distribution kinds keep
  /// their decoder mean here as well.
  const VaeParams& params() const { return params_; }
  const UpdateDiagnostics& last_update() const { return diagnostics_; }
  const std::vector<Tensor>& stored() const { return storage_; }

 protected:
  NeuralStrategy(StrategyKind kind, NeuralConfig config, VaeParams init, Rng rng);

  void write_common(BinaryWriter& w) const;
  void write_storage(BinaryWriter& w) const;

  StrategyKind kind_;
  NeuralConfig config_;
  VaeParams params_;
  Rng rng_;
  std::size_t step_ = 0;
  std::vector<Tensor> storage_;
  UpdateDiagnostics diagnostics_;
};

/// ml-plugin, replay and catastrophic: a single parameter vector fitted by
/// maximum likelihood (through the ELBO) on the step's training set.
class PointStrategy final : public NeuralStrategy {
 public:
  PointStrategy(StrategyKind kind, NeuralConfig config, VaeParams init, Rng rng);
  void update(const Tensor& observation) override;
  std::vector<Codelength> encode(const Tensor& x, Rng rng) const override;
  std::vector<std::uint8_t> serialize() const override;
};

/// bayes-mixture and vcl: a diagonal Gaussian over decoder weights fitted by
/// maximizing the expected ELBO minus a KL to an anchor (the fixed prior for
/// bayes-mixture, the previous posterior for vcl).
class PosteriorStrategy final : public NeuralStrategy {
 public:
  PosteriorStrategy(StrategyKind kind, NeuralConfig config, VaeParams init, Rng rng);
  void update(const Tensor& observation) override;
  std::vector<Codelength> encode(const Tensor& x, Rng rng) const override;
  std::vector<std::uint8_t> serialize() const override;

  const DiagonalGaussian& posterior() const { return posterior_; }
  const DiagonalGaussian& prior() const { return prior_; }

 private:
  DiagonalGaussian prior_;
  DiagonalGaussian posterior_;
  bool fitted_ = false;
};

/// ml-mixture: a hyper-prior p(theta | phi) over decoder weights, updated
/// greedily with a fresh per-step posterior and a KL anchor to phi_{t-1}.
class MlMixtureStrategy final : public NeuralStrategy {
 public:
  MlMixtureStrategy(NeuralConfig config, VaeParams init, Rng rng);
  void update(const Tensor& observation) override;
  std::vector<Codelength> encode(const Tensor& x, Rng rng) const override;
  std::vector<std::uint8_t> serialize() const override;

  const DiagonalGaussian& hyper_prior() const { return phi_; }

 private:
  DiagonalGaussian phi_;
};

std::unique_ptr<NeuralStrategy> make_neural_strategy(StrategyKind kind, const NeuralConfig& config,
                                                     const VaeParams& init, Rng rng);

}  // namespace mdlcl
