#include "mdlcl/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace mdlcl::ad {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSquare: return "square";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kAddRowvector: return "add_rowvector";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kSlice: return "slice";
    case OpKind::kSumRows: return "sum_rows";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->value(id_); }

Tensor Gradients::operator[](Var v) const {
  const std::size_t id = v.id();
  if (id < grads_.size() && !grads_[id].empty()) return grads_[id];
  return Tensor(shapes_.at(id), 0.0);
}

void accumulate(std::vector<Tensor>& grads, std::size_t id, const Tensor& g) {
  if (grads[id].empty())
    grads[id] = g;
  else
    grads[id] += g;
}

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw DomainError("leaf: non-finite value");
  nodes_.push_back({OpKind::kLeaf, {}, std::move(value), nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw DomainError("constant: non-finite value");
  nodes_.push_back({OpKind::kConstant, {}, std::move(value), nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
  if (!value.all_finite())
    throw DomainError(std::string(op_name(kind)) + ": result is not finite for output shape " +
                      shape_string(value.shape()));
  bool requires_grad = false;
  for (std::size_t i : inputs) requires_grad = requires_grad || nodes_[i].requires_grad;
  nodes_.push_back({kind, std::move(inputs), std::move(value), std::move(backward), requires_grad});
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var output) const {
  if (output.value().size() != 1)
    throw ShapeError("backward needs a scalar output, got shape " + shape_string(output.shape()));
  std::vector<Tensor> grads(nodes_.size());
  grads[output.id()] = Tensor(output.shape(), 1.0);
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (grads[i].empty() || !node.requires_grad || !node.backward) continue;
    node.backward(*this, grads[i], grads);
  }
  std::vector<Shape> shapes;
  shapes.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    shapes.push_back(nodes_[i].value.shape());
    if (!nodes_[i].requires_grad) grads[i] = Tensor();
  }
  return Gradients(std::move(grads), std::move(shapes));
}

namespace {

void require_same_tape(Var a, Var b, OpKind kind) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op_name(kind)) + ": operands on different tapes");
}

void require_same_shape(Var a, Var b, OpKind kind) {
  require_same_tape(a, b, kind);
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op_name(kind)) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out = a;
  for (double& v : out.data()) v = f(v);
  return out;
}

/// Elementwise unary op whose derivative is a function of (input, output).
template <class Fwd, class Deriv>
Var unary(OpKind kind, Var a, Fwd fwd, Deriv deriv) {
  Tensor out = map(a.value(), fwd);
  const std::size_t ai = a.id();
  const std::size_t oi = a.tape().size();
  return a.tape().record(kind, {ai}, std::move(out),
                         [ai, oi, deriv](const Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
                           const Tensor& x = t.value(ai);
                           const Tensor& y = t.value(oi);
                           Tensor ga = g;
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= deriv(x[i], y[i]);
                           accumulate(grads, ai, ga);
                         });
}

double softplus_value(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, OpKind::kAdd);
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(OpKind::kAdd, {ai, bi}, a.value() + b.value(),
                         [ai, bi](const Tape&, const Tensor& g, std::vector<Tensor>& grads) {
                           accumulate(grads, ai, g);
                           accumulate(grads, bi, g);
                         });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, OpKind::kSub);
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(OpKind::kSub, {ai, bi}, a.value() - b.value(),
                         [ai, bi](const Tape&, const Tensor& g, std::vector<Tensor>& grads) {
                           accumulate(grads, ai, g);
                           accumulate(grads, bi, g * -1.0);
                         });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, OpKind::kMul);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(OpKind::kMul, {ai, bi}, std::move(out),
                         [ai, bi](const Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
                           const Tensor& av = t.value(ai);
                           const Tensor& bv = t.value(bi);
                           Tensor ga = g, gb = g;
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             ga[i] *= bv[i];
                             gb[i] *= av[i];
                           }
                           accumulate(grads, ai, ga);
                           accumulate(grads, bi, gb);
                         });
}

namespace {

// c[n,m] (+)= a[n,k] * b[k,m], with optional transposes of a or b.
void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool ta,
          bool tb) {
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ta ? a[p * n + i] : a[i * k + p];
      if (aip == 0.0) continue;
      if (!tb) {
        const double* brow = b + p * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
      } else {
        for (std::size_t j = 0; j < m; ++j) crow[j] += aip * b[j * k + p];
      }
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, OpKind::kMatmul);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0])
    throw ShapeError("matmul: shape mismatch " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  const std::size_t n = av.shape()[0], k = av.shape()[1], m = bv.shape()[1];
  Tensor out({n, m});
  gemm(av.data().data(), bv.data().data(), out.data().data(), n, k, m, false, false);
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(OpKind::kMatmul, {ai, bi}, std::move(out),
                         [ai, bi, n, k, m](const Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
                           const Tensor& av = t.value(ai);
                           const Tensor& bv = t.value(bi);
                           Tensor ga({n, k});
                           gemm(g.data().data(), bv.data().data(), ga.data().data(), n, m, k, false, true);
                           Tensor gb({k, m});
                           gemm(av.data().data(), g.data().data(), gb.data().data(), k, n, m, true, false);
                           accumulate(grads, ai, ga);
                           accumulate(grads, bi, gb);
                         });
}

Var sigmoid(Var a) {
  return unary(OpKind::kSigmoid, a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      OpKind::kTanh, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var a) {
  return unary(OpKind::kSoftplus, a, softplus_value, [](double x, double) { return sigmoid_value(x); });
}

Var exp(Var a) {
  for (double v : a.value().data())
    if (!std::isfinite(std::exp(v)))
      throw DomainError("exp: overflow at argument " + std::to_string(v) + " (shape " + shape_string(a.shape()) +
                        ")");
  return unary(
      OpKind::kExp, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double v : a.value().data())
    if (!(v > 0.0))
      throw DomainError("log: non-positive argument " + std::to_string(v) + " (shape " + shape_string(a.shape()) +
                        ")");
  return unary(
      OpKind::kLog, a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(
      OpKind::kSquare, a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var scale(Var a, double factor) {
  return unary(
      OpKind::kScale, a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      OpKind::kAddScalar, a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id();
  return a.tape().record(OpKind::kSum, {ai}, Tensor::scalar(s),
                         [ai](const Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
                           accumulate(grads, ai, Tensor(t.value(ai).shape(), g.item()));
                         });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id();
  return a.tape().record(OpKind::kMean, {ai}, Tensor::scalar(s / n),
                         [ai, n](const Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
                           accumulate(grads, ai, Tensor(t.value(ai).shape(), g.item() / n));
                         });
}

Var add_rowvector(Var a, Var b) {
  require_same_tape(a, b, OpKind::kAddRowvector);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool b_ok = (bv.rank() == 1) || (bv.rank() == 2 && bv.shape()[0] == 1);
  if (av.rank() != 2 || !b_ok || bv.size() != av.shape()[1])
    throw ShapeError("add_rowvector: shape mismatch " + shape_string(av.shape()) + " vs " +
                     shape_string(bv.shape()));
  const std::size_t n = av.shape()[0], m = av.shape()[1];
  Tensor out = av;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bv[j];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(OpKind::kAddRowvector, {ai, bi}, std::move(out),
                         [ai, bi, n, m](const Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
                           Tensor gb(t.value(bi).shape(), 0.0);
                           for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = 0; j < m; ++j) gb[j] += g[i * m + j];
                           accumulate(grads, ai, g);
                           accumulate(grads, bi, gb);
                         });
}

Var slice(Var a, std::size_t offset, Shape shape) {
  const std::size_t count = shape_size(shape);
  if (offset + count > a.value().size())
    throw ShapeError("slice: range [" + std::to_string(offset) + "," + std::to_string(offset + count) +
                     ") exceeds input shape " + shape_string(a.shape()));
  const auto src = a.value().data();
  std::vector<double> vals(src.begin() + static_cast<std::ptrdiff_t>(offset),
                           src.begin() + static_cast<std::ptrdiff_t>(offset + count));
  const std::size_t ai = a.id();
  return a.tape().record(OpKind::kSlice, {ai}, Tensor(std::move(shape), std::move(vals)),
                         [ai, offset](const Tape& t, const Tensor& g, std::vector<Tensor>& grads) {
                           Tensor ga(t.value(ai).shape(), 0.0);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] = g[i];
                           accumulate(grads, ai, ga);
                         });
}

Var sum_rows(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ShapeError("sum_rows: needs rank 2, got " + shape_string(av.shape()));
  const std::size_t n = av.shape()[0], m = av.shape()[1];
  Tensor out({n, 1});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i] += av[i * m + j];
  const std::size_t ai = a.id();
  return a.tape().record(OpKind::kSumRows, {ai}, std::move(out),
                         [ai, n, m](const Tape&, const Tensor& g, std::vector<Tensor>& grads) {
                           Tensor ga({n, m});
                           for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = 0; j < m; ++j) ga[i * m + j] = g[i];
                           accumulate(grads, ai, ga);
                         });
}

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, Var b) { return mul(a, b); }

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& point, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  Tensor analytic;
  {
    Tape tape;
    Var x = tape.leaf(point);
    Var y = f(tape, x);
    analytic = tape.backward(y)[x];
  }
  auto eval = [&](const Tensor& p) {
    Tape tape;
    Var x = tape.leaf(p);
    return f(tape, x).value().item();
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    Tensor hi = point, lo = point;
    hi[i] += step;
    lo[i] -= step;
    const double numeric = (eval(hi) - eval(lo)) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace mdlcl::ad
