#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mdlcl/snapshot.h"
#include "mdlcl/vae.h"
#include "test_util.h"

using namespace mdlcl;

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Plain-loop MLP layer: out = tanh?(in W + b), W stored [in, out] row-major.
std::vector<double> layer(const std::vector<double>& in, const Tensor& w, const Tensor& b, bool squash) {
  const std::size_t n_in = w.shape()[0], n_out = w.shape()[1];
  std::vector<double> out(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    double s = b[j];
    for (std::size_t i = 0; i < n_in; ++i) s += in[i] * w[i * n_out + j];
    out[j] = squash ? std::tanh(s) : s;
  }
  return out;
}

double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

// One hidden layer and one latent dimension only.
struct ToyOracle {
  const VaeParams& p;

  std::pair<double, double> latent(const std::vector<double>& x) const {
    const auto h = layer(x, p.encoder[0], p.encoder[1], true);
    return {layer(h, p.encoder[2], p.encoder[3], false)[0], layer(h, p.encoder[4], p.encoder[5], false)[0]};
  }
  double log_lik(const std::vector<double>& x, double z) const {
    const auto h = layer({z}, p.decoder[0], p.decoder[1], true);
    const auto logits = layer(h, p.decoder[2], p.decoder[3], false);
    double ll = 0;
    for (std::size_t i = 0; i < x.size(); ++i) ll += x[i] * logits[i] - softplus(logits[i]);
    return ll;
  }
  // Exact ELBO: the reconstruction expectation by quadrature over the noise.
  double elbo(const std::vector<double>& x) const {
    const auto [m, ls] = latent(x);
    const double s = std::exp(ls);
    const int n = 10000;
    const double h = 16.0 / n;
    double recon = 0;
    for (int i = 0; i < n; ++i) {
      const double e = -8 + (i + 0.5) * h;
      recon += std::exp(-0.5 * e * e) / std::sqrt(2 * std::numbers::pi) * log_lik(x, m + s * e) * h;
    }
    return recon - (0.5 * (m * m + s * s - 1) - ls);
  }
  double log_evidence(const std::vector<double>& x) const {
    const int n = 10000;
    const double h = 20.0 / n;
    double top = -INFINITY;
    std::vector<double> terms(n);
    for (int i = 0; i < n; ++i) {
      const double z = -10 + (i + 0.5) * h;
      terms[i] = log_lik(x, z) - 0.5 * z * z - 0.5 * std::log(2 * std::numbers::pi) + std::log(h);
      top = std::max(top, terms[i]);
    }
    double s = 0;
    for (double t : terms) s += std::exp(t - top);
    return top + std::log(s);
  }
};

VaeParams toy_params(std::uint64_t seed) {
  Rng rng(seed);
  VaeParams p = VaeParams::initialize({4, {3}, 1}, rng);
  // Non-zero biases so the test exercises them too.
  for (auto* group : {&p.encoder, &p.decoder})
    for (std::size_t i = 1; i < group->size(); i += 2)
      for (double& v : (*group)[i].data()) v = 0.3 * rng.normal();
  return p;
}

Tensor binary_rows(Rng& rng, std::size_t n, std::size_t d) {
  Tensor x({n, d});
  for (double& v : x.data()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return x;
}

}  // namespace

TEST(Vae, ShapesFollowTheArchitecture) {
  const VaeArchitecture a{10, {7, 5}, 3};
  EXPECT_EQ(a.encoder_shapes(), (std::vector<Shape>{{10, 7}, {7}, {7, 5}, {5}, {5, 3}, {3}, {5, 3}, {3}}));
  EXPECT_EQ(a.decoder_shapes(), (std::vector<Shape>{{3, 5}, {5}, {5, 7}, {7}, {7, 10}, {10}}));
  EXPECT_EQ(a.decoder_size(), 3u * 5 + 5 + 5 * 7 + 7 + 7 * 10 + 10);
  EXPECT_EQ(VaeArchitecture::mnist().input_dim, 784u);
}

TEST(Vae, UniformDecoderCostsOneBitPerPixel) {
  const VaeParams p = VaeParams::zeros(VaeArchitecture::tiny(16));
  Rng rng(1);
  const Tensor x = binary_rows(rng, 5, 16);
  for (double bits : codelength(x, p, Rng(2), 4)) EXPECT_NEAR(bits, 16.0, 1e-12);
  for (double e : elbo(x, p, Tensor({5, 4}, 0.7))) EXPECT_NEAR(e, -16 * kLn2, 1e-12);
}

TEST(Vae, ConfidentDecoderReconstructionTerm) {
  VaeParams p = VaeParams::zeros(VaeArchitecture::tiny(8));
  for (double& v : p.decoder.back().data()) v = std::log(0.99 / 0.01);
  const Tensor ones({1, 8}, 1.0);
  EXPECT_NEAR(codelength(ones, p, Rng(3), 2)[0], -8 * std::log2(0.99), 1e-10);
  Tensor mixed = ones;
  mixed[0] = 0.0;
  EXPECT_NEAR(codelength(mixed, p, Rng(3), 2)[0], -7 * std::log2(0.99) - std::log2(0.01), 1e-10);
}

TEST(Vae, ElboMatchesHandWrittenForwardPass) {
  const VaeParams p = toy_params(5);
  const ToyOracle oracle{p};
  Rng rng(6);
  const Tensor x = binary_rows(rng, 3, 4);
  const Tensor noise({3, 1}, std::vector<double>{0.3, -1.2, 2.0});
  const auto got = elbo(x, p, noise);
  for (std::size_t r = 0; r < 3; ++r) {
    const std::vector<double> row(x.data().begin() + 4 * r, x.data().begin() + 4 * r + 4);
    const auto [m, ls] = oracle.latent(row);
    const double want = oracle.log_lik(row, m + std::exp(ls) * noise[r]) - (0.5 * (m * m + std::exp(2 * ls) - 1) - ls);
    EXPECT_NEAR(got[r], want, 1e-12);
  }
}

TEST(Vae, MonteCarloCodelengthMatchesQuadratureElbo) {
  const VaeParams p = toy_params(7);
  const ToyOracle oracle{p};
  const std::vector<std::vector<double>> rows = {{1, 0, 1, 1}, {0, 0, 0, 1}, {1, 1, 1, 1}};
  for (const auto& row : rows) {
    const Tensor x({1, 4}, row);
    const std::size_t S = 4096;
    Rng rng(8);
    const auto noises = latent_noise(1, 1, S, rng);
    std::vector<double> draws;
    for (const Tensor& n : noises) draws.push_back(codelength(x, p, std::span(&n, 1))[0]);
    double mean = 0, var = 0;
    for (double d : draws) mean += d / S;
    for (double d : draws) var += (d - mean) * (d - mean) / (S - 1);
    const double exact_bits = -oracle.elbo(row) / kLn2;
    EXPECT_NEAR(mean, exact_bits, 4 * std::sqrt(var / S) + 1e-9);
    EXPECT_NEAR(codelength(x, p, noises)[0], mean, 1e-9);
    // The negative ELBO upper-bounds the exact codelength.
    EXPECT_GE(exact_bits, -oracle.log_evidence(row) / kLn2 - 1e-9);
  }
}

TEST(Vae, ManyNoiseSamplesAgreeWithOneSampleOnAverage) {
  const VaeParams p = toy_params(9);
  Rng rng(10);
  const Tensor x = binary_rows(rng, 6, 4);
  const auto many = codelength(x, p, Rng(11), 64);
  std::vector<double> one_avg(6, 0.0);
  for (int rep = 0; rep < 64; ++rep) {
    const auto one = codelength(x, p, Rng(100 + rep), 1);
    for (std::size_t i = 0; i < 6; ++i) one_avg[i] += one[i] / 64;
  }
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(many[i], one_avg[i], 0.5);
}

TEST(Vae, PointMassWeightsReduceToPlainCodelength) {
  Rng rng(12);
  const VaeParams p = VaeParams::initialize(VaeArchitecture::tiny(8), rng);
  const Tensor x = binary_rows(rng, 4, 8);
  const std::size_t S = 5;
  const auto latents = latent_noise(4, p.arch.latent_dim, S, rng);
  std::vector<Tensor> weight_noise;
  for (std::size_t s = 0; s < S; ++s) weight_noise.push_back(rng.normal_tensor({p.arch.decoder_size()}));
  const auto q = DiagonalGaussian::around(p.flat_decoder(), -20.0);
  const auto got = expected_codelength_under_q(x, p, q, weight_noise, latents);
  const auto want = codelength(x, p, latents);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(got.bits_per_example[i], want[i], 1e-6);
  EXPECT_EQ(got.samples, S);
}

TEST(Vae, ExpectedCodelengthRejectsWrongDimension) {
  const VaeParams p = VaeParams::zeros(VaeArchitecture::tiny(8));
  EXPECT_THROW(expected_codelength_under_q(Tensor({1, 8}), p, DiagonalGaussian::isotropic(3, 0, 1), 2, Rng(1)),
               ShapeError);
}

TEST(Vae, UniformDecoderSamplesAreOneHalf) {
  const VaeParams p = VaeParams::zeros(VaeArchitecture::tiny(8));
  Rng rng(13);
  const Tensor s = sample_data(p, 10, rng);
  for (double v : s.data()) EXPECT_EQ(v, 0.5);
  const Tensor b = sample_data(p, 10, rng, true);
  for (double v : b.data()) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(Vae, RejectsNonPixelInput) {
  const VaeParams p = VaeParams::zeros(VaeArchitecture::tiny(4));
  EXPECT_THROW(check_pixels(Tensor({1, 4}, std::vector<double>{0, 1, 1.5, 0}), 4), std::domain_error);
  EXPECT_ANY_THROW(codelength(Tensor({1, 5}), p, Rng(1), 1));
}

TEST(Vae, FlatDecoderRoundTrip) {
  Rng rng(14);
  VaeParams p = VaeParams::initialize(VaeArchitecture::tiny(8), rng);
  auto flat = p.flat_decoder();
  ASSERT_EQ(flat.size(), p.arch.decoder_size());
  for (double& v : flat) v += 1.0;
  p.set_flat_decoder(flat);
  EXPECT_EQ(p.flat_decoder(), flat);
  flat.pop_back();
  EXPECT_ANY_THROW(p.set_flat_decoder(flat));
}

TEST(Vae, SnapshotRoundTrip) {
  Rng rng(15);
  const VaeParams p = VaeParams::initialize({6, {5, 4}, 2}, rng);
  BinaryWriter w;
  write_vae_snapshot(w, p);
  const auto bytes = w.take();
  BinaryReader r(bytes);
  const VaeParams back = read_vae_snapshot(r);
  EXPECT_TRUE(r.at_end());
  EXPECT_EQ(back.arch, p.arch);
  EXPECT_EQ(back.encoder, p.encoder);
  EXPECT_EQ(back.decoder, p.decoder);
}

TEST(Vae, ElboGradientMatchesFiniteDifferences) {
  Rng rng(16);
  const VaeParams p = VaeParams::initialize({5, {4}, 2}, rng);
  const Tensor x = binary_rows(rng, 3, 5);
  const Tensor noise = rng.normal_tensor({3, 2});
  for (std::size_t which = 0; which < p.decoder.size(); ++which) {
    auto f = [&](ad::Tape& t, ad::Var v) {
      auto enc = constants(t, p.encoder);
      auto dec = constants(t, p.decoder);
      dec[which] = v;
      return ad::sum(elbo_rows(t.constant(x), enc, dec, noise, p.arch));
    };
    ad::Tape t;
    ad::Var v = t.leaf(p.decoder[which]);
    const Tensor g = t.backward(f(t, v))[v];
    EXPECT_LT(testutil::max_relative_error(g, testutil::central_difference(f, p.decoder[which], 1e-6)), 1e-5);
  }
}
