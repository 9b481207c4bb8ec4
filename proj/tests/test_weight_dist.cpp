#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "mdlcl/rng.h"
#include "mdlcl/weight_dist.h"
#include "test_util.h"

using namespace mdlcl;

namespace {

// KL between univariate normals, written out directly.
double kl_1d(double mq, double sq, double mp, double sp) {
  return std::log(sp / sq) + (sq * sq + (mq - mp) * (mq - mp)) / (2 * sp * sp) - 0.5;
}

}  // namespace

TEST(DiagonalGaussian, RejectsMismatchedAndNonFiniteFields) {
  EXPECT_THROW(DiagonalGaussian({0.0, 1.0}, {0.0}), ShapeError);
  EXPECT_THROW(DiagonalGaussian({std::nan("")}, {0.0}), std::domain_error);
  EXPECT_THROW(DiagonalGaussian::isotropic(3, 0.0, 0.0), std::domain_error);
}

TEST(DiagonalGaussian, KlMatchesUnivariateFormulaSummedOverCoordinates) {
  const DiagonalGaussian q({0.3, -1.0, 2.0}, {std::log(0.5), std::log(2.0), 0.0});
  const DiagonalGaussian p({0.0, 0.5, 2.0}, {0.0, std::log(0.1), std::log(3.0)});
  const double want = kl_1d(0.3, 0.5, 0.0, 1.0) + kl_1d(-1.0, 2.0, 0.5, 0.1) + kl_1d(2.0, 1.0, 2.0, 3.0);
  EXPECT_NEAR(kl_divergence(q, p), want, 1e-12);
}

TEST(DiagonalGaussian, KlOfIdenticalIsZeroAndOtherwisePositive) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> m(4), s(4), m2(4), s2(4);
    for (auto* v : {&m, &s, &m2, &s2})
      for (double& e : *v) e = rng.normal();
    const DiagonalGaussian a(m, s), b(m2, s2);
    EXPECT_EQ(kl_divergence(a, a), 0.0);
    EXPECT_GT(kl_divergence(a, b), 0.0);
  }
}

TEST(DiagonalGaussian, KlDimensionMismatchThrows) {
  EXPECT_THROW(kl_divergence(DiagonalGaussian::isotropic(2, 0, 1), DiagonalGaussian::isotropic(3, 0, 1)), ShapeError);
}

TEST(DiagonalGaussian, LogProbMatchesNormalDensity) {
  const DiagonalGaussian d({1.0, -2.0}, {std::log(0.5), std::log(3.0)});
  const std::vector<double> x = {1.2, 0.0};
  auto lpdf = [](double x, double m, double s) {
    return -0.5 * std::log(2 * std::numbers::pi) - std::log(s) - 0.5 * (x - m) * (x - m) / (s * s);
  };
  EXPECT_NEAR(log_prob(d, x), lpdf(1.2, 1.0, 0.5) + lpdf(0.0, -2.0, 3.0), 1e-12);
}

TEST(DiagonalGaussian, SampleMomentsMatchWithinStandardErrors) {
  const DiagonalGaussian d({1.5, -0.5}, {std::log(0.3), std::log(2.0)});
  Rng rng(8);
  const int n = 40000;
  double s0 = 0, s1 = 0, q0 = 0, q1 = 0;
  for (int i = 0; i < n; ++i) {
    const auto x = sample(d, rng);
    s0 += x[0];
    s1 += x[1];
    q0 += (x[0] - 1.5) * (x[0] - 1.5);
    q1 += (x[1] + 0.5) * (x[1] + 0.5);
  }
  EXPECT_NEAR(s0 / n, 1.5, 4 * 0.3 / std::sqrt(n));
  EXPECT_NEAR(s1 / n, -0.5, 4 * 2.0 / std::sqrt(n));
  // Var of the sample variance of a normal is 2 sigma^4 / n.
  EXPECT_NEAR(q0 / n, 0.09, 4 * std::sqrt(2.0 / n) * 0.09);
  EXPECT_NEAR(q1 / n, 4.0, 4 * std::sqrt(2.0 / n) * 4.0);
}

TEST(DiagonalGaussian, ReparamIsMeanPlusScaledNoise) {
  const DiagonalGaussian d({1.0, 2.0}, {0.0, std::log(0.5)});
  const std::vector<double> noise = {2.0, -2.0};
  EXPECT_EQ(sample_reparam(d, noise), (std::vector<double>{3.0, 1.0}));
}

TEST(DiagonalGaussian, TapeKlAgreesWithPlainKlAndDifferentiates) {
  Rng rng(4);
  const DiagonalGaussian p({0.1, -0.3, 0.7}, {-1.0, 0.2, 0.0});
  for (int i = 0; i < 20; ++i) {
    const DiagonalGaussian q(std::vector<double>{rng.normal(), rng.normal(), rng.normal()},
                             std::vector<double>{rng.normal(), rng.normal(), rng.normal()});
    ad::Tape tape;
    GaussianVars qv = leaf_vars(tape, q);
    ad::Var kl = kl_divergence(qv, constant_vars(tape, p));
    EXPECT_NEAR(kl.value().item(), kl_divergence(q, p), 1e-12);

    using Fn = std::function<ad::Var(ad::Tape&, ad::Var)>;
    const std::vector<std::pair<Fn, Tensor>> cases = {
        {[&](ad::Tape& t, ad::Var m) {
           return kl_divergence(GaussianVars{m, t.constant(q.log_std_tensor())}, constant_vars(t, p));
         },
         q.mean_tensor()},
        {[&](ad::Tape& t, ad::Var s) {
           return kl_divergence(GaussianVars{t.constant(q.mean_tensor()), s}, constant_vars(t, p));
         },
         q.log_std_tensor()},
        {[&](ad::Tape& t, ad::Var m) {
           return kl_divergence(constant_vars(t, q), GaussianVars{m, t.constant(p.log_std_tensor())});
         },
         p.mean_tensor()},
        {[&](ad::Tape& t, ad::Var s) {
           return kl_divergence(constant_vars(t, q), GaussianVars{t.constant(p.mean_tensor()), s});
         },
         p.log_std_tensor()},
    };
    for (const auto& [f, x] : cases) {
      ad::Tape t;
      ad::Var v = t.leaf(x);
      EXPECT_LT(testutil::max_relative_error(t.backward(f(t, v))[v], testutil::central_difference(f, x, 1e-6)), 1e-4);
    }
  }
}

TEST(DiagonalGaussian, TapeReparamGradient) {
  const Tensor noise = Tensor::vector({0.5, -1.5});
  ad::Tape tape;
  GaussianVars d{tape.leaf(Tensor::vector({1.0, 2.0})), tape.leaf(Tensor::vector({0.0, std::log(2.0)}))};
  ad::Var s = ad::sum(sample_reparam(d, noise));
  const auto g = tape.backward(s);
  EXPECT_EQ(g[d.mean], Tensor::vector({1.0, 1.0}));
  // d/d(log_std) of exp(log_std) * noise
  EXPECT_NEAR(g[d.log_std][0], 0.5, 1e-15);
  EXPECT_NEAR(g[d.log_std][1], -3.0, 1e-15);
}
