#include "mdlcl/optim.h"

#include <cmath>
#include <string>

namespace mdlcl {

namespace {
void check_shapes(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, const char* who) {
  if (params.size() != grads.size())
    throw ShapeError(std::string(who) + ": " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " gradients");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->shape() != grads[i].shape())
      throw ShapeError(std::string(who) + ": param " + std::to_string(i) + " shape " +
                       shape_string(params[i]->shape()) + " vs gradient " + shape_string(grads[i].shape()));
}
}  // namespace

void sgd_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr) {
  check_shapes(params, grads, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
  }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
  check_shapes(params, grads, "adam_step");
  if (t_ == 0) {
    m_.clear();
    v_.clear();
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape(), 0.0);
      v_.emplace_back(p->shape(), 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state holds " + std::to_string(m_.size()) + " tensors, got " +
                     std::to_string(params.size()));
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m_[i].shape() != params[i]->shape())
      throw ShapeError("adam_step: state shape " + shape_string(m_[i].shape()) + " vs param " +
                       shape_string(params[i]->shape()));
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace mdlcl
