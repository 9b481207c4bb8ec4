#include "mdlcl/weight_dist.h"

#include <cmath>
#include <numbers>
#include <string>

namespace mdlcl {

namespace {
void check_dims(std::size_t a, std::size_t b, const char* who) {
  if (a != b) throw ShapeError(std::string(who) + ": dimension mismatch " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace

DiagonalGaussian::DiagonalGaussian(std::vector<double> m, std::vector<double> ls)
    : mean(std::move(m)), log_std(std::move(ls)) {
  check_dims(mean.size(), log_std.size(), "DiagonalGaussian");
  for (std::size_t i = 0; i < mean.size(); ++i)
    if (!std::isfinite(mean[i]) || !std::isfinite(log_std[i]))
      throw std::domain_error("DiagonalGaussian: non-finite entry at " + std::to_string(i));
}

DiagonalGaussian DiagonalGaussian::isotropic(std::size_t dim, double m, double stddev) {
  if (!(stddev > 0.0)) throw std::domain_error("DiagonalGaussian: stddev must be positive");
  return {std::vector<double>(dim, m), std::vector<double>(dim, std::log(stddev))};
}

DiagonalGaussian DiagonalGaussian::around(std::vector<double> m, double ls) {
  const std::size_t n = m.size();
  return {std::move(m), std::vector<double>(n, ls)};
}

double kl_divergence(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  check_dims(q.dim(), p.dim(), "kl_divergence");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double d = q.log_std[i] - p.log_std[i];
    const double diff = q.mean[i] - p.mean[i];
    kl += -d + 0.5 * std::exp(2.0 * d) + 0.5 * diff * diff * std::exp(-2.0 * p.log_std[i]) - 0.5;
  }
  // Round-off can leave a tiny negative residue for identical arguments.
  return kl < 0.0 ? 0.0 : kl;
}

std::vector<double> sample_reparam(const DiagonalGaussian& d, std::span<const double> noise) {
  check_dims(noise.size(), d.dim(), "sample_reparam");
  std::vector<double> out(d.dim());
  for (std::size_t i = 0; i < d.dim(); ++i) out[i] = d.mean[i] + std::exp(d.log_std[i]) * noise[i];
  return out;
}

std::vector<double> sample(const DiagonalGaussian& d, Rng& rng) {
  std::vector<double> noise(d.dim());
  for (double& e : noise) e = rng.normal();
  return sample_reparam(d, noise);
}

double log_prob(const DiagonalGaussian& d, std::span<const double> theta) {
  check_dims(theta.size(), d.dim(), "log_prob");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (std::size_t i = 0; i < d.dim(); ++i) {
    const double z = (theta[i] - d.mean[i]) * std::exp(-d.log_std[i]);
    lp += -half_log_2pi - d.log_std[i] - 0.5 * z * z;
  }
  return lp;
}

GaussianVars leaf_vars(ad::Tape& tape, const DiagonalGaussian& d) {
  return {tape.leaf(d.mean_tensor()), tape.leaf(d.log_std_tensor())};
}

GaussianVars constant_vars(ad::Tape& tape, const DiagonalGaussian& d) {
  return {tape.constant(d.mean_tensor()), tape.constant(d.log_std_tensor())};
}

ad::Var kl_divergence(GaussianVars q, GaussianVars p) {
  using namespace ad;
  if (q.mean.shape() != p.mean.shape())
    throw ShapeError("kl_divergence: shape mismatch " + shape_string(q.mean.shape()) + " vs " +
                     shape_string(p.mean.shape()));
  const double n = static_cast<double>(q.mean.value().size());
  Var d = q.log_std - p.log_std;
  Var ratio = scale(exp(scale(d, 2.0)), 0.5);
  Var mahal = scale(square(q.mean - p.mean) * exp(scale(p.log_std, -2.0)), 0.5);
  return add_scalar(sum(ratio + mahal - d), -0.5 * n);
}

ad::Var sample_reparam(GaussianVars d, const Tensor& noise) {
  using namespace ad;
  if (noise.size() != d.mean.value().size())
    throw ShapeError("sample_reparam: noise shape " + shape_string(noise.shape()) + " vs mean " +
                     shape_string(d.mean.shape()));
  Var eps = d.mean.tape().constant(noise.reshaped(d.mean.shape()));
  return d.mean + exp(d.log_std) * eps;
}

}  // namespace mdlcl
