#include "dexgrasp/nn/tape.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>

namespace dexgrasp::nn {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

std::string dims(const Matrix& m) { return fmt::format("[{}x{}]", m.rows(), m.cols()); }

enum class Broadcast { Same, Row, Col, Scalar };

Broadcast broadcast_kind(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
  throw DimensionError(fmt::format("{}: cannot broadcast {} onto {}", op, dims(b), dims(a)));
}

Matrix expand(const Matrix& b, Broadcast kind, Eigen::Index rows, Eigen::Index cols) {
  switch (kind) {
    case Broadcast::Same:
      return b;
    case Broadcast::Row:
      return b.replicate(rows, 1);
    case Broadcast::Col:
      return b.replicate(1, cols);
    case Broadcast::Scalar:
      return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

Matrix reduce(const Matrix& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::Same:
      return g;
    case Broadcast::Row:
      return g.colwise().sum();
    case Broadcast::Col:
      return g.rowwise().sum();
    case Broadcast::Scalar:
      return Matrix::Constant(1, 1, g.sum());
  }
  return g;
}

Tape& owner(Var a) {
  if (a.tape == nullptr) throw ContractViolation("variable is not attached to a tape");
  return *a.tape;
}

Tape& owner(Var a, Var b) {
  Tape& t = owner(a);
  t.check_owned(b);
  return t;
}

// Shared shape for unary elementwise ops: y = f(x), dx = g * df(x, y).
template <typename Forward, typename Derivative>
Var unary(Var a, Forward f, Derivative df) {
  Tape& t = owner(a);
  const Matrix& x = t.value(a);
  Matrix y = f(x);
  const bool rg = t.requires_grad(a);
  const std::size_t ia = a.id;
  return t.push(std::move(y), rg, [ia, df](Tape& tp, std::size_t self) {
    const auto& n = tp.node(self);
    Matrix d = df(tp.node(ia).value, n.value);
    tp.accumulate(ia, n.grad.cwiseProduct(d));
  });
}

}  // namespace

const Matrix& Var::value() const { return owner(*this).value(*this); }

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

void Tape::check_owned(Var v) const {
  if (v.tape != this) {
    throw ContractViolation(
        fmt::format("variable {} belongs to a different tape than tape {}", v.id, id_));
  }
  if (v.id >= nodes_.size()) throw ContractViolation("variable id out of range");
}

Var Tape::push(Matrix value, bool requires_grad, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::constant(const Tensor& t) { return constant(Matrix(t.matrix())); }

Var Tape::input(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::parameter(Tensor& param) {
  Var v = push(Matrix(param.matrix()), true, nullptr);
  nodes_[v.id].param = &param;
  return v;
}

const Matrix& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[v.id].value;
}

Matrix Tape::grad(Var v) const {
  check_owned(v);
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  check_owned(loss);
  const Node& root = nodes_[loss.id];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ContractViolation(
        fmt::format("backward needs a scalar loss, got {}", dims(root.value)));
  }
  if (backward_done_) {
    for (auto& n : nodes_) n.grad.resize(0, 0);
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
  for (auto& n : nodes_) {
    if (n.param != nullptr && n.grad.size() != 0) n.param->grad_matrix() += n.grad;
  }
}

// ---- binary -----------------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  const Broadcast k = broadcast_kind(x, y, "add");
  Matrix out = x + expand(y, k, x.rows(), x.cols());
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    if (ra) tp.accumulate(ia, g);
    if (rb) tp.accumulate(ib, reduce(g, k));
  });
}

Var sub(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  const Broadcast k = broadcast_kind(x, y, "sub");
  Matrix out = x - expand(y, k, x.rows(), x.cols());
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    if (ra) tp.accumulate(ia, g);
    if (rb) tp.accumulate(ib, -reduce(g, k));
  });
}

Var mul(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  const Broadcast k = broadcast_kind(x, y, "mul");
  Matrix out = x.cwiseProduct(expand(y, k, x.rows(), x.cols()));
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& xv = tp.node(ia).value;
    const Matrix& yv = tp.node(ib).value;
    if (ra) tp.accumulate(ia, g.cwiseProduct(expand(yv, k, xv.rows(), xv.cols())));
    if (rb) tp.accumulate(ib, reduce(g.cwiseProduct(xv), k));
  });
}

Var div(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  const Broadcast k = broadcast_kind(x, y, "div");
  Matrix out = x.cwiseQuotient(expand(y, k, x.rows(), x.cols()));
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& xv = tp.node(ia).value;
    const Matrix ye = expand(tp.node(ib).value, k, xv.rows(), xv.cols());
    if (ra) tp.accumulate(ia, g.cwiseQuotient(ye));
    if (rb) {
      Matrix d = -(g.array() * xv.array() / ye.array().square()).matrix();
      tp.accumulate(ib, reduce(d, k));
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = owner(a);
  Matrix out = t.value(a) * s;
  const std::size_t ia = a.id;
  return t.push(std::move(out), t.requires_grad(a), [=](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.node(self).grad * s);
  });
}

Var add_scalar(Var a, double s) {
  Tape& t = owner(a);
  Matrix out = (t.value(a).array() + s).matrix();
  const std::size_t ia = a.id;
  return t.push(std::move(out), t.requires_grad(a), [=](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.node(self).grad);
  });
}

Var neg(Var a) { return scale(a, -1.0); }

// ---- unary ------------------------------------------------------------------

Var relu(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.cwiseMax(0.0); },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() > 0.0).cast<double>().matrix();
      });
}

Var tanh(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().tanh().matrix(); },
      [](const Matrix&, const Matrix& y) -> Matrix {
        return (1.0 - y.array().square()).matrix();
      });
}

Var exp(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().exp().matrix(); },
      [](const Matrix&, const Matrix& y) -> Matrix { return y; });
}

Var log(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().log().matrix(); },
      [](const Matrix& x, const Matrix&) -> Matrix { return x.array().inverse().matrix(); });
}

Var softplus(Var a) {
  return unary(
      a,
      [](const Matrix& x) -> Matrix {
        return (x.array().max(0.0) + (-x.array().abs()).exp().log1p()).matrix();
      },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return (1.0 / (1.0 + (-x.array()).exp())).matrix();
      });
}

Var square(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().square().matrix(); },
      [](const Matrix& x, const Matrix&) -> Matrix { return 2.0 * x; });
}

Var sqrt(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().sqrt().matrix(); },
      [](const Matrix&, const Matrix& y) -> Matrix { return (0.5 / y.array()).matrix(); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](const Matrix& x) -> Matrix { return x.cwiseMax(lo).cwiseMin(hi); },
      [lo, hi](const Matrix& x, const Matrix&) -> Matrix {
        return ((x.array() >= lo) && (x.array() <= hi)).cast<double>().matrix();
      });
}

Var minimum(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError(fmt::format("minimum: {} vs {}", dims(x), dims(y)));
  }
  Matrix out = x.cwiseMin(y);
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& xv = tp.node(ia).value;
    const Matrix& yv = tp.node(ib).value;
    const Matrix pick_a = (xv.array() <= yv.array()).cast<double>().matrix();
    if (ra) tp.accumulate(ia, g.cwiseProduct(pick_a));
    if (rb) tp.accumulate(ib, g.cwiseProduct((1.0 - pick_a.array()).matrix()));
  });
}

// ---- reductions -------------------------------------------------------------

Var sum(Var a) {
  Tape& t = owner(a);
  const Matrix& x = t.value(a);
  Matrix out = Matrix::Constant(1, 1, x.sum());
  const std::size_t ia = a.id;
  const Eigen::Index r = x.rows(), c = x.cols();
  return t.push(std::move(out), t.requires_grad(a), [=](Tape& tp, std::size_t self) {
    tp.accumulate(ia, Matrix::Constant(r, c, tp.node(self).grad(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Tape& t = owner(a);
  const Matrix& x = t.value(a);
  Matrix out = x.rowwise().sum();
  const std::size_t ia = a.id;
  const Eigen::Index c = x.cols();
  return t.push(std::move(out), t.requires_grad(a), [=](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.node(self).grad.replicate(1, c));
  });
}

Var row_dot(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError(fmt::format("row_dot: {} vs {}", dims(x), dims(y)));
  }
  Matrix out = x.cwiseProduct(y).rowwise().sum();
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;  // Rx1
    const Matrix& xv = tp.node(ia).value;
    const Matrix& yv = tp.node(ib).value;
    if (ra) tp.accumulate(ia, (yv.array().colwise() * g.col(0).array()).matrix());
    if (rb) tp.accumulate(ib, (xv.array().colwise() * g.col(0).array()).matrix());
  });
}

Var row_normalize(Var a) {
  Tape& t = owner(a);
  const Matrix& x = t.value(a);
  Eigen::VectorXd norms = x.rowwise().norm();
  for (Eigen::Index r = 0; r < norms.size(); ++r) {
    if (!(norms(r) >= 1e-12)) {
      throw NumericError(fmt::format("row_normalize: row {} has norm {:.3g}", r, norms(r)));
    }
  }
  Matrix out = (x.array().colwise() / norms.array()).matrix();
  const std::size_t ia = a.id;
  return t.push(std::move(out), t.requires_grad(a), [=](Tape& tp, std::size_t self) {
    const auto& n = tp.node(self);
    const Matrix& y = n.value;
    const Matrix& g = n.grad;
    Eigen::VectorXd proj = y.cwiseProduct(g).rowwise().sum();
    Matrix d = g - (y.array().colwise() * proj.array()).matrix();
    tp.accumulate(ia, (d.array().colwise() / norms.array()).matrix());
  });
}

Var logsumexp(Var a) {
  Tape& t = owner(a);
  const Matrix& x = t.value(a);
  const double m = x.maxCoeff();
  const double s = std::log((x.array() - m).exp().sum()) + m;
  const std::size_t ia = a.id;
  return t.push(Matrix::Constant(1, 1, s), t.requires_grad(a),
                [ia, s](Tape& tp, std::size_t self) {
                  const double g = tp.node(self).grad(0, 0);
                  const Matrix& xv = tp.node(ia).value;
                  tp.accumulate(ia, (g * (xv.array() - s).exp()).matrix());
                });
}

Var logsumexp_rows(Var a) {
  Tape& t = owner(a);
  const Matrix& x = t.value(a);
  Eigen::VectorXd m = x.rowwise().maxCoeff();
  Eigen::VectorXd s =
      (x.array().colwise() - m.array()).exp().rowwise().sum().log().matrix() + m;
  Matrix out = s;
  const std::size_t ia = a.id;
  return t.push(std::move(out), t.requires_grad(a), [ia, s](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    const Matrix& xv = tp.node(ia).value;
    Matrix soft = (xv.array().colwise() - s.array()).exp().matrix();
    tp.accumulate(ia, (soft.array().colwise() * g.col(0).array()).matrix());
  });
}

// ---- linear algebra ---------------------------------------------------------

Var linear(Var x, Var w, Var b) {
  Tape& t = owner(x, w);
  t.check_owned(b);
  const Matrix& xv = t.value(x);
  const Matrix& wv = t.value(w);
  const Matrix& bv = t.value(b);
  if (xv.cols() != wv.cols()) {
    throw DimensionError(
        fmt::format("linear: input {} does not match weight {}", dims(xv), dims(wv)));
  }
  if (bv.rows() != 1 || bv.cols() != wv.rows()) {
    throw DimensionError(
        fmt::format("linear: bias {} does not match weight {}", dims(bv), dims(wv)));
  }
  Matrix out(xv.rows(), wv.rows());
  out.noalias() = xv * wv.transpose();
  out.rowwise() += bv.row(0);
  const std::size_t ix = x.id, iw = w.id, ib = b.id;
  const bool rx = t.requires_grad(x), rw = t.requires_grad(w), rbias = t.requires_grad(b);
  return t.push(std::move(out), rx || rw || rbias, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    if (rx) {
      Matrix dx(g.rows(), tp.node(iw).value.cols());
      dx.noalias() = g * tp.node(iw).value;
      tp.accumulate(ix, dx);
    }
    if (rw) {
      Matrix dw(g.cols(), tp.node(ix).value.cols());
      dw.noalias() = g.transpose() * tp.node(ix).value;
      tp.accumulate(iw, dw);
    }
    if (rbias) tp.accumulate(ib, g.colwise().sum());
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  if (x.cols() != y.cols()) {
    throw DimensionError(fmt::format("matmul_nt: {} vs {}", dims(x), dims(y)));
  }
  Matrix out(x.rows(), y.rows());
  out.noalias() = x * y.transpose();
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    if (ra) {
      Matrix d(g.rows(), tp.node(ib).value.cols());
      d.noalias() = g * tp.node(ib).value;
      tp.accumulate(ia, d);
    }
    if (rb) {
      Matrix d(g.cols(), tp.node(ia).value.cols());
      d.noalias() = g.transpose() * tp.node(ia).value;
      tp.accumulate(ib, d);
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = owner(a, b);
  const Matrix& x = t.value(a);
  const Matrix& y = t.value(b);
  if (x.rows() != y.rows()) {
    throw DimensionError(fmt::format("concat_cols: {} vs {}", dims(x), dims(y)));
  }
  Matrix out(x.rows(), x.cols() + y.cols());
  out << x, y;
  const std::size_t ia = a.id, ib = b.id;
  const bool ra = t.requires_grad(a), rb = t.requires_grad(b);
  const Eigen::Index ca = x.cols(), cb = y.cols();
  return t.push(std::move(out), ra || rb, [=](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node(self).grad;
    if (ra) tp.accumulate(ia, g.leftCols(ca));
    if (rb) tp.accumulate(ib, g.rightCols(cb));
  });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  Tape& t = owner(a);
  const Matrix& x = t.value(a);
  if (begin < 0 || count < 0 || begin + count > x.cols()) {
    throw DimensionError(
        fmt::format("slice_cols: [{}, {}) outside {}", begin, begin + count, dims(x)));
  }
  Matrix out = x.middleCols(begin, count);
  const std::size_t ia = a.id;
  const Eigen::Index r = x.rows(), c = x.cols();
  return t.push(std::move(out), t.requires_grad(a), [=](Tape& tp, std::size_t self) {
    Matrix d = Matrix::Zero(r, c);
    d.middleCols(begin, count) = tp.node(self).grad;
    tp.accumulate(ia, d);
  });
}

}  // namespace dexgrasp::nn
