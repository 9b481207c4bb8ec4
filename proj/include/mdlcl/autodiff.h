#pragma once

// Eager reverse-mode differentiation. Every op evaluates immediately and
// appends a node to a Tape; Tape::backward walks the nodes in reverse.
// Nodes can only reference earlier nodes, so the tape is acyclic and
// topologically ordered by construction.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "mdlcl/tensor.h"

namespace mdlcl::ad {

enum class OpKind {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kMatmul,
  kSigmoid,
  kTanh,
  kSoftplus,
  kExp,
  kLog,
  kSquare,
  kSum,
  kMean,
  kAddRowvector,
  kScale,
  kAddScalar,
  kSlice,
  kSumRows,
};

std::string_view op_name(OpKind kind);

/// Raised when exp overflows or log receives a non-positive argument.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Gradients {
 public:
  Gradients(std::vector<Tensor> grads, std::vector<Shape> shapes)
      : grads_(std::move(grads)), shapes_(std::move(shapes)) {}

  /// d(output)/d(v); zeros if v does not influence the output.
  Tensor operator[](Var v) const;

 private:
  std::vector<Tensor> grads_;
  std::vector<Shape> shapes_;
};

/// The computation record.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tape&, const Tensor& grad_out, std::vector<Tensor>& grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Tensor value);
  /// Input that never receives a gradient.
  Var constant(Tensor value);

  /// Reverse sweep from a single-element output.
  Gradients backward(Var output) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_[id].kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }

  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    BackwardFn backward;
    bool requires_grad;
  };
  std::vector<Node> nodes_;
};

/// Adds g into grads[id], allocating on first touch.
void accumulate(std::vector<Tensor>& grads, std::size_t id, const Tensor& g);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var matmul(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
/// a[n,m] + b[m] (or b[1,m]) added to every row.
Var add_rowvector(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var neg(Var a);
/// Contiguous range [offset, offset + prod(shape)) of a, reshaped.
Var slice(Var a, std::size_t offset, Shape shape);
/// Row sums of a rank-2 tensor, shape [n,1].
Var sum_rows(Var a);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& point, double step);

}  // namespace mdlcl::ad
