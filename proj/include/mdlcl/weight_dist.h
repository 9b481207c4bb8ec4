#pragma once

#include <span>
#include <vector>

#include "mdlcl/autodiff.h"
#include "mdlcl/rng.h"

namespace mdlcl {

/// Fully factorized Gaussian over a flattened parameter vector, scale
/// stored as log standard deviation.
struct DiagonalGaussian {
  std::vector<double> mean;
  std::vector<double> log_std;

  DiagonalGaussian() = default;
  DiagonalGaussian(std::vector<double> mean, std::vector<double> log_std);

  static DiagonalGaussian isotropic(std::size_t dim, double mean, double stddev);
  static DiagonalGaussian around(std::vector<double> mean, double log_std);

  std::size_t dim() const { return mean.size(); }
  Tensor mean_tensor() const { return Tensor::vector(mean); }
  Tensor log_std_tensor() const { return Tensor::vector(log_std); }

  bool operator==(const DiagonalGaussian&) const = default;
};

/// KL[q || p] in nats.
double kl_divergence(const DiagonalGaussian& q, const DiagonalGaussian& p);

/// mean + exp(log_std) * noise.
std::vector<double> sample_reparam(const DiagonalGaussian& d, std::span<const double> noise);
std::vector<double> sample(const DiagonalGaussian& d, Rng& rng);

double log_prob(const DiagonalGaussian& d, std::span<const double> theta);

/// A diagonal Gaussian whose fields live on a tape.
struct GaussianVars {
  ad::Var mean;
  ad::Var log_std;
};

GaussianVars leaf_vars(ad::Tape& tape, const DiagonalGaussian& d);
GaussianVars constant_vars(ad::Tape& tape, const DiagonalGaussian& d);

ad::Var kl_divergence(GaussianVars q, GaussianVars p);
ad::Var sample_reparam(GaussianVars d, const Tensor& noise);

}  // namespace mdlcl
