#include "mdlcl/neural_strategy.h"

#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mdlcl/ml_mixture.h"

namespace mdlcl {

std::string NeuralConfig::description() const {
  std::ostringstream os;
  os << "in=" << arch.input_dim << " hidden=";
  for (std::size_t h : arch.hidden) os << h << ',';
  os << " latent=" << arch.latent_dim << " epochs=" << epochs << " batch=" << batch_size << " lr=" << adam.lr
     << " beta1=" << adam.beta1 << " beta2=" << adam.beta2 << " eps=" << adam.eps << " sigma=" << prior_sigma
     << " prior_kl=" << prior_kl << " init_log_std=" << init_log_std << " mlm_q=" << mlm_q_init_log_std
     << " s_eval=" << eval_samples << " replay=" << replay_samples << " binarize=" << replay_binarize;
  return os.str();
}

namespace {

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch)));
  return out;
}

/// A step's training rows with per-row weights on the log-likelihood.
struct TrainingSet {
  Tensor x;
  std::vector<double> weights;

  double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

TrainingSet unweighted(Tensor x) {
  const std::size_t n = x.rows();
  return {std::move(x), std::vector<double>(n, 1.0)};
}

/// sum_i w_i ELBO_i over the selected rows.
ad::Var weighted_elbo(ad::Tape& tape, const TrainingSet& set, std::span<const std::size_t> rows,
                      std::span<const ad::Var> enc, std::span<const ad::Var> dec, const VaeArchitecture& arch,
                      Rng& rng) {
  Tensor xb = set.x.gather_rows(rows);
  Tensor wb({rows.size(), 1});
  for (std::size_t i = 0; i < rows.size(); ++i) wb[i] = set.weights[rows[i]];
  Tensor noise = rng.normal_tensor({rows.size(), arch.latent_dim});
  ad::Var e = elbo_rows(tape.constant(std::move(xb)), enc, dec, noise, arch);
  return ad::sum(ad::mul(tape.constant(std::move(wb)), e));
}

/// Runs `epochs` passes of minibatch Adam. `step_loss` receives the tape,
/// the minibatch rows and the factor that scales the minibatch likelihood
/// up to the whole set. It returns the loss and the leaf variables paired
/// with `params`.
template <class StepLoss>
std::vector<double> train(const TrainingSet& set, const NeuralConfig& cfg, const std::vector<Tensor*>& params,
                          Rng& rng, StepLoss step_loss) {
  Adam adam(cfg.adam);
  std::vector<double> epoch_losses;
  const std::size_t n = set.x.rows();
  const double norm = 1.0 / set.total_weight();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    const auto batches = minibatches(n, cfg.batch_size, rng);
    for (const auto& rows : batches) {
      ad::Tape tape;
      const double upscale = static_cast<double>(n) / static_cast<double>(rows.size());
      auto [loss, vars] = step_loss(tape, rows, upscale);
      loss = ad::scale(loss, norm);
      const auto grads = tape.backward(loss);
      std::vector<Tensor> g;
      g.reserve(vars.size());
      for (ad::Var v : vars) g.push_back(grads[v]);
      adam.step(params, g);
      epoch_loss += loss.value().item() / static_cast<double>(batches.size());
    }
    epoch_losses.push_back(epoch_loss);
  }
  return epoch_losses;
}

std::vector<Codelength> to_codelengths(const std::vector<double>& bits) {
  std::vector<Codelength> out;
  out.reserve(bits.size());
  for (double b : bits) out.emplace_back(b);
  return out;
}

void write_gaussian(BinaryWriter& w, const DiagonalGaussian& d) {
  w.doubles(d.mean);
  w.doubles(d.log_std);
}

}  // namespace

NeuralStrategy::NeuralStrategy(StrategyKind kind, NeuralConfig config, VaeParams init, Rng rng)
    : kind_(kind), config_(std::move(config)), params_(std::move(init)), rng_(rng) {
  if (params_.arch != config_.arch) throw std::invalid_argument("initial parameters do not match the configured architecture");
  params_.validate();
  if (config_.epochs == 0 || config_.batch_size == 0) throw std::invalid_argument("epochs and batch size must be positive");
}

std::size_t NeuralStrategy::storage_bytes() const {
  std::size_t n = 0;
  for (const Tensor& t : storage_) n += t.size() * sizeof(double);
  return n;
}

void NeuralStrategy::write_common(BinaryWriter& w) const {
  write_strategy_header(w, {kind_, step_, fingerprint(config_.description())});
  write_vae_snapshot(w, params_);
}

void NeuralStrategy::write_storage(BinaryWriter& w) const {
  w.u64(storage_.size());
  for (const Tensor& t : storage_) w.tensor(t);
}

// ---------------------------------------------------------------------------

PointStrategy::PointStrategy(StrategyKind kind, NeuralConfig config, VaeParams init, Rng rng)
    : NeuralStrategy(kind, std::move(config), std::move(init), rng) {
  if (!is_point_estimate(kind)) throw std::invalid_argument("PointStrategy does not implement " + std::string(to_string(kind)));
}

void PointStrategy::update(const Tensor& obs) {
  const std::size_t t = step_ + 1;
  if (obs.size() == 0) {
    step_ = t;
    return;
  }
  check_pixels(obs, config_.arch.input_dim);
  Rng rng = rng_.split(t);
  TrainingSet set;
  switch (kind_) {
    case StrategyKind::kMlPlugin:
      storage_.push_back(obs);
      set = unweighted(vstack(storage_));
      break;
    case StrategyKind::kCatastrophic:
      set = unweighted(obs);
      break;
    case StrategyKind::kReplay: {
      if (t == 1) {
        set = unweighted(obs);
        break;
      }
      const std::size_t n = obs.rows();
      const std::size_t r = config_.replay_samples ? config_.replay_samples : n;
      Rng gen = rng.split("replay");
      Tensor pseudo = sample_data(params_, r, gen, config_.replay_binarize);
      // (t-1) past observations, each worth n examples, stand in via r pseudo-examples.
      const double w = static_cast<double>(t - 1) * static_cast<double>(n) / static_cast<double>(r);
      std::vector<Tensor> parts = {obs, std::move(pseudo)};
      set.x = vstack(parts);
      set.weights.assign(n, 1.0);
      set.weights.insert(set.weights.end(), r, w);
      break;
    }
    default:
      throw std::logic_error("unreachable");
  }

  std::vector<Tensor*> params;
  for (Tensor& p : params_.encoder) params.push_back(&p);
  for (Tensor& p : params_.decoder) params.push_back(&p);
  Rng train_rng = rng.split("train");
  diagnostics_ = {};
  diagnostics_.epoch_losses = train(set, config_, params, train_rng, [&](ad::Tape& tape, const auto& rows, double upscale) {
    auto enc = leaves(tape, params_.encoder);
    auto dec = leaves(tape, params_.decoder);
    ad::Var loss = ad::scale(weighted_elbo(tape, set, rows, enc, dec, config_.arch, train_rng), -upscale);
    std::vector<ad::Var> vars = enc;
    vars.insert(vars.end(), dec.begin(), dec.end());
    return std::pair{loss, vars};
  });
  step_ = t;
}

std::vector<Codelength> PointStrategy::encode(const Tensor& x, Rng rng) const {
  return to_codelengths(codelength(x, params_, rng, config_.eval_samples));
}

std::vector<std::uint8_t> PointStrategy::serialize() const {
  BinaryWriter w;
  write_common(w);
  write_storage(w);
  return w.take();
}

// ---------------------------------------------------------------------------

PosteriorStrategy::PosteriorStrategy(StrategyKind kind, NeuralConfig config, VaeParams init, Rng rng)
    : NeuralStrategy(kind, std::move(config), std::move(init), rng) {
  if (kind != StrategyKind::kBayesMixture && kind != StrategyKind::kVcl)
    throw std::invalid_argument("PosteriorStrategy does not implement " + std::string(to_string(kind)));
  prior_ = DiagonalGaussian::isotropic(config_.arch.decoder_size(), 0.0, config_.prior_sigma);
  posterior_ = prior_;
}

void PosteriorStrategy::update(const Tensor& obs) {
  const std::size_t t = step_ + 1;
  if (obs.size() == 0) {
    step_ = t;
    return;
  }
  check_pixels(obs, config_.arch.input_dim);
  Rng rng = rng_.split(t);
  TrainingSet set;
  if (kind_ == StrategyKind::kBayesMixture) {
    storage_.push_back(obs);
    set = unweighted(vstack(storage_));
  } else {
    set = unweighted(obs);
  }
  // bayes-mixture always regularizes toward the fixed prior; vcl toward q_{t-1}
  // (which is the prior itself before the first fit).
  const DiagonalGaussian anchor = kind_ == StrategyKind::kBayesMixture ? prior_ : posterior_;
  DiagonalGaussian start =
      fitted_ ? posterior_ : DiagonalGaussian::around(params_.flat_decoder(), config_.init_log_std);
  Tensor mean = start.mean_tensor();
  Tensor log_std = start.log_std_tensor();

  std::vector<Tensor*> params;
  for (Tensor& p : params_.encoder) params.push_back(&p);
  params.push_back(&mean);
  params.push_back(&log_std);
  Rng train_rng = rng.split("train");
  diagnostics_ = {};
  diagnostics_.epoch_losses = train(set, config_, params, train_rng, [&](ad::Tape& tape, const auto& rows, double upscale) {
    auto enc = leaves(tape, params_.encoder);
    GaussianVars q{tape.leaf(mean), tape.leaf(log_std)};
    ad::Var theta = sample_reparam(q, train_rng.normal_tensor(mean.shape()));
    auto dec = split_decoder(theta, config_.arch);
    ad::Var loss = ad::scale(weighted_elbo(tape, set, rows, enc, dec, config_.arch, train_rng), -upscale);
    if (config_.prior_kl) loss = loss + kl_divergence(q, constant_vars(tape, anchor));
    std::vector<ad::Var> vars = enc;
    vars.push_back(q.mean);
    vars.push_back(q.log_std);
    return std::pair{loss, vars};
  });
  posterior_ = DiagonalGaussian(mean.values(), log_std.values());
  diagnostics_.anchor_kl = kl_divergence(posterior_, anchor);
  params_.set_flat_decoder(posterior_.mean);
  fitted_ = true;
  step_ = t;
}

std::vector<Codelength> PosteriorStrategy::encode(const Tensor& x, Rng rng) const {
  return to_codelengths(
      expected_codelength_under_q(x, params_, posterior_, config_.eval_samples, rng).bits_per_example);
}

std::vector<std::uint8_t> PosteriorStrategy::serialize() const {
  BinaryWriter w;
  write_common(w);
  w.u8(fitted_ ? 1 : 0);
  write_gaussian(w, posterior_);
  write_storage(w);
  return w.take();
}

// ---------------------------------------------------------------------------

MlMixtureStrategy::MlMixtureStrategy(NeuralConfig config, VaeParams init, Rng rng)
    : NeuralStrategy(StrategyKind::kMlMixture, std::move(config), std::move(init), rng) {
  phi_ = DiagonalGaussian::around(params_.flat_decoder(), config_.mlm_q_init_log_std);
}

void MlMixtureStrategy::update(const Tensor& obs) {
  const std::size_t t = step_ + 1;
  if (obs.size() == 0) {
    step_ = t;
    return;
  }
  check_pixels(obs, config_.arch.input_dim);
  Rng rng = rng_.split(t);
  TrainingSet set = unweighted(obs);
  const DiagonalGaussian phi_prev = phi_;
  Tensor q_mean = phi_prev.mean_tensor();
  Tensor q_log_std = DiagonalGaussian::around(phi_prev.mean, config_.mlm_q_init_log_std).log_std_tensor();
  Tensor phi_mean = phi_prev.mean_tensor();
  Tensor phi_log_std = phi_prev.log_std_tensor();

  std::vector<Tensor*> params;
  for (Tensor& p : params_.encoder) params.push_back(&p);
  for (Tensor* p : {&q_mean, &q_log_std, &phi_mean, &phi_log_std}) params.push_back(p);
  Rng train_rng = rng.split("train");
  diagnostics_ = {};
  diagnostics_.epoch_losses = train(set, config_, params, train_rng, [&](ad::Tape& tape, const auto& rows, double upscale) {
    auto enc = leaves(tape, params_.encoder);
    GaussianVars q{tape.leaf(q_mean), tape.leaf(q_log_std)};
    GaussianVars phi{tape.leaf(phi_mean), tape.leaf(phi_log_std)};
    ad::Var theta = sample_reparam(q, train_rng.normal_tensor(q_mean.shape()));
    auto dec = split_decoder(theta, config_.arch);
    ad::Var loglik = ad::scale(weighted_elbo(tape, set, rows, enc, dec, config_.arch, train_rng), upscale);
    ad::Var loss = ad::neg(ml_mixture_objective(loglik, q, phi, constant_vars(tape, phi_prev), t));
    std::vector<ad::Var> vars = enc;
    for (ad::Var v : {q.mean, q.log_std, phi.mean, phi.log_std}) vars.push_back(v);
    return std::pair{loss, vars};
  });
  // q_t is discarded; only the hyper-prior carries over.
  phi_ = DiagonalGaussian(phi_mean.values(), phi_log_std.values());
  diagnostics_.anchor_kl = kl_divergence(phi_prev, phi_);
  params_.set_flat_decoder(phi_.mean);
  step_ = t;
}

std::vector<Codelength> MlMixtureStrategy::encode(const Tensor& x, Rng rng) const {
  return to_codelengths(expected_codelength_under_q(x, params_, phi_, config_.eval_samples, rng).bits_per_example);
}

std::vector<std::uint8_t> MlMixtureStrategy::serialize() const {
  BinaryWriter w;
  write_common(w);
  write_gaussian(w, phi_);
  write_storage(w);
  return w.take();
}

// ---------------------------------------------------------------------------

std::unique_ptr<NeuralStrategy> make_neural_strategy(StrategyKind kind, const NeuralConfig& config,
                                                     const VaeParams& init, Rng rng) {
  switch (kind) {
    case StrategyKind::kMlPlugin:
    case StrategyKind::kReplay:
    case StrategyKind::kCatastrophic:
      return std::make_unique<PointStrategy>(kind, config, init, rng);
    case StrategyKind::kBayesMixture:
    case StrategyKind::kVcl:
      return std::make_unique<PosteriorStrategy>(kind, config, init, rng);
    case StrategyKind::kMlMixture:
      return std::make_unique<MlMixtureStrategy>(config, init, rng);
  }
  throw std::invalid_argument("unknown strategy kind");
}

}  // namespace mdlcl
