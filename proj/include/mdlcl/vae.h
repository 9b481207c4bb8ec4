#pragma once

// MLP variational autoencoder with a diagonal Gaussian latent and Bernoulli
// pixel likelihood. The codelength of an example is its negative ELBO in
// bits, an upper bound on -log2 p(x | params).

#include <span>
#include <vector>

#include "mdlcl/autodiff.h"
#include "mdlcl/rng.h"
#include "mdlcl/snapshot.h"
#include "mdlcl/weight_dist.h"

namespace mdlcl {

struct VaeArchitecture {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden = {32};
  std::size_t latent_dim = 4;

  /// input -> 32 -> 2x4 latent statistics, mirrored decoder.
  static VaeArchitecture tiny(std::size_t input_dim = 16);
  /// 784 -> 200 -> 200 -> 2x20, mirrored decoder.
  static VaeArchitecture mnist();

  /// [W0, b0, ..., W_mean, b_mean, W_logstd, b_logstd]
  std::vector<Shape> encoder_shapes() const;
  /// [W0, b0, ..., W_out, b_out]
  std::vector<Shape> decoder_shapes() const;
  std::size_t decoder_size() const;

  bool operator==(const VaeArchitecture&) const = default;
};

struct VaeParams {
  VaeArchitecture arch;
  std::vector<Tensor> encoder;
  std::vector<Tensor> decoder;

  /// Glorot-uniform weights, zero biases.
  static VaeParams initialize(const VaeArchitecture& arch, Rng& rng);
  static VaeParams zeros(const VaeArchitecture& arch);

  std::vector<double> flat_decoder() const;
  void set_flat_decoder(std::span<const double> flat);
  /// Throws ShapeError if a tensor does not match the architecture.
  void validate() const;
};

/// Throws std::domain_error unless every value is in [0,1] and x has input_dim columns.
void check_pixels(const Tensor& x, std::size_t input_dim);

std::vector<ad::Var> leaves(ad::Tape& tape, const std::vector<Tensor>& tensors);
std::vector<ad::Var> constants(ad::Tape& tape, const std::vector<Tensor>& tensors);
/// Views a flat decoder parameter vector as the decoder's layer tensors.
std::vector<ad::Var> split_decoder(ad::Var flat, const VaeArchitecture& arch);

struct LatentStats {
  ad::Var mean;     // [n, latent]
  ad::Var log_std;  // [n, latent]
};

LatentStats encode_latent(ad::Var x, std::span<const ad::Var> encoder, const VaeArchitecture& arch);
/// Bernoulli logits [n, input_dim].
ad::Var decode_logits(ad::Var z, std::span<const ad::Var> decoder, const VaeArchitecture& arch);

/// Per-example single-sample ELBO in nats, shape [n,1]:
/// E_q(z|x)[log p(x|z)] - KL[q(z|x) || N(0,I)] with z = mean + exp(log_std) * z_noise.
ad::Var elbo_rows(ad::Var x, std::span<const ad::Var> encoder, std::span<const ad::Var> decoder,
                  const Tensor& z_noise, const VaeArchitecture& arch);

/// Latent KL term alone, shape [n,1].
ad::Var latent_kl_rows(const LatentStats& stats);

/// Per-example ELBO in nats for fixed parameters and noise.
std::vector<double> elbo(const Tensor& x, const VaeParams& params, const Tensor& z_noise);

/// Draws `samples` latent noise tensors of shape [n, latent].
std::vector<Tensor> latent_noise(std::size_t n, std::size_t latent_dim, std::size_t samples, Rng& rng);

/// Per-example -ELBO / ln 2, averaged over the supplied latent noise draws.
std::vector<double> codelength(const Tensor& x, const VaeParams& params, std::span<const Tensor> noises);
std::vector<double> codelength(const Tensor& x, const VaeParams& params, Rng rng, std::size_t samples = 16);

/// bits / input_dim.
double bits_per_dim(double bits_per_example, std::size_t input_dim);

struct ExpectedCodelength {
  std::vector<double> bits_per_example;  // averaged over weight samples
  double mean_bits = 0.0;                // mean over examples
  double standard_error = 0.0;           // of mean_bits across weight samples
  std::size_t samples = 0;
};

/// Monte Carlo E_{theta ~ weights}[codelength(x, encoder, theta)]. Weight
/// sample s is paired with latent noise draw s.
ExpectedCodelength expected_codelength_under_q(const Tensor& x, const VaeParams& params,
                                               const DiagonalGaussian& weights,
                                               std::span<const Tensor> weight_noises,
                                               std::span<const Tensor> latent_noises);
ExpectedCodelength expected_codelength_under_q(const Tensor& x, const VaeParams& params,
                                               const DiagonalGaussian& weights, std::size_t samples, Rng rng);

/// z ~ N(0, I) decoded to Bernoulli means (or binarized draws), [n, input_dim].
Tensor sample_data(const VaeParams& params, std::size_t n, Rng& rng, bool binarize = false);

void write_vae_snapshot(BinaryWriter& w, const VaeParams& params);
VaeParams read_vae_snapshot(BinaryReader& r);

}  // namespace mdlcl
