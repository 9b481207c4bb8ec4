#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mdlcl {

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass() const { return error < tolerance; }
};

/// Finite-difference checks of every tape op and of the VAE ELBO with
/// respect to each parameter tensor, at `points` random points each.
std::vector<CheckResult> gradient_self_check(std::uint64_t seed, std::size_t points = 20);

/// Conjugate strategies against closed forms: Beta marginal, vcl and
/// bayes-mixture against exact sequential prediction, replay against its
/// closed form.
std::vector<CheckResult> oracle_self_check(std::uint64_t seed);

}  // namespace mdlcl
