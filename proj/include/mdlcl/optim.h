#pragma once

#include <vector>

#include "mdlcl/tensor.h"

namespace mdlcl {

void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments. State is allocated on the first step
/// and must see the same parameter shapes afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);
  void set_lr(double lr) { config_.lr = lr; }

  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long t_ = 0;
};

}  // namespace mdlcl
