#pragma once

#include "dexgrasp/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace dexgrasp::nn {

class Tape;

/// Handle to a node on a gradient tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode gradient tape. Built fresh for each training step.
///
/// Nodes are appended in evaluation order so the tape is already
/// topologically sorted; `backward` walks it in reverse once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    Matrix value;
    Matrix grad;  // empty until something flows into it
    bool requires_grad = false;
    Tensor* param = nullptr;
    BackwardFn backward;
  };

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return nodes_.size(); }

  /// Leaf that never receives gradient.
  Var constant(Matrix value);
  Var constant(const Tensor& t);
  /// Leaf whose gradient is readable through `grad()` after backward.
  Var input(Matrix value);
  /// Leaf bound to a learnable tensor; backward accumulates into `param.grad()`.
  Var parameter(Tensor& param);

  /// Populates gradients of every node reachable from `loss` (a 1x1 value).
  /// Parameter gradients are accumulated (+=) into their tensors.
  void backward(Var loss);

  const Matrix& value(Var v) const;
  /// Gradient of the last backward w.r.t. `v`; zero matrix if nothing reached it.
  Matrix grad(Var v) const;

  // Op-implementation interface.
  Var push(Matrix value, bool requires_grad, BackwardFn fn);
  Node& node(std::size_t i) { return nodes_[i]; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  template <typename Expr>
  void accumulate(std::size_t i, const Expr& g) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }
  void check_owned(Var v) const;

 private:
  std::uint64_t id_;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// ---- differentiable operations -------------------------------------------
// Binary elementwise ops accept `b` with the same shape as `a`, a 1xC row,
// an Rx1 column or a 1x1 scalar; `b` is broadcast over `a`.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);

Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
Var square(Var a);
Var sqrt(Var a);
/// Pass-through gradient inside [lo, hi], zero outside.
Var clamp(Var a, double lo, double hi);
/// Elementwise minimum of two same-shape inputs; ties route gradient to `a`.
Var minimum(Var a, Var b);

Var sum(Var a);
Var mean(Var a);
/// RxC -> Rx1
Var row_sum(Var a);
/// Row-wise inner product of two RxC inputs -> Rx1.
Var row_dot(Var a, Var b);
/// Scales each row to unit L2 norm; throws NumericError on a row with norm < 1e-12.
Var row_normalize(Var a);
/// log(sum(exp(a))) over all entries -> 1x1.
Var logsumexp(Var a);
/// Row-wise log-sum-exp -> Rx1.
Var logsumexp_rows(Var a);

/// x Wᵀ + b with x: BxIn, W: OutxIn, b: 1xOut.
Var linear(Var x, Var w, Var b);
/// a bᵀ
Var matmul_nt(Var a, Var b);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);

}  // namespace dexgrasp::nn
