#include "dexgrasp/nn/mlp.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dexgrasp::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity:
      return "identity";
    case Activation::Relu:
      return "relu";
    case Activation::Tanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError(fmt::format("unknown activation '{}'", s));
}

namespace {

Matrix apply(Activation a, Matrix m) {
  switch (a) {
    case Activation::Identity:
      return m;
    case Activation::Relu:
      return m.cwiseMax(0.0);
    case Activation::Tanh:
      return m.array().tanh().matrix();
  }
  return m;
}

Var apply(Activation a, Var v) {
  switch (a) {
    case Activation::Identity:
      return v;
    case Activation::Relu:
      return relu(v);
    case Activation::Tanh:
      return tanh(v);
  }
  return v;
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> sizes, Activation hidden, Activation output,
         std::mt19937_64& rng)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  for (std::size_t s : sizes_) {
    if (s == 0) throw ConfigError("MLP layer sizes must be positive");
  }
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    const std::size_t in = sizes_[i], out = sizes_[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Tensor({out, in}), Tensor({out})};
    for (double& w : layer.weight.data()) w = dist(rng);
    for (double& b : layer.bias.data()) b = dist(rng);
    layers_.push_back(std::move(layer));
  }
}

std::size_t Mlp::input_dim() const { return sizes_.empty() ? 0 : sizes_.front(); }
std::size_t Mlp::output_dim() const { return sizes_.empty() ? 0 : sizes_.back(); }

void Mlp::check_input(Eigen::Index cols) const {
  if (static_cast<std::size_t>(cols) != input_dim()) {
    throw DimensionError(fmt::format("MLP expects input [Bx{}], got [Bx{}]", input_dim(), cols));
  }
}

Matrix Mlp::forward(const Matrix& input) const {
  check_input(input.cols());
  Matrix h = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    Matrix z(h.rows(), l.weight.rows());
    z.noalias() = h * l.weight.matrix().transpose();
    z.rowwise() += l.bias.matrix().row(0);
    h = apply(i + 1 == layers_.size() ? output_ : hidden_, std::move(z));
  }
  return h;
}

Tensor Mlp::forward(const Tensor& input) const {
  if (input.shape().size() != 2) {
    throw DimensionError(
        fmt::format("MLP input must be [batch x in], got {}", shape_string(input.shape())));
  }
  return Tensor::from_matrix(forward(Matrix(input.matrix())));
}

Var Mlp::forward_impl(Tape& tape, Var input, Grad mode) const {
  check_input(input.cols());
  Var h = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = const_cast<DenseLayer&>(layers_[i]);
    Var w = mode == Grad::Track ? tape.parameter(l.weight) : tape.constant(l.weight);
    Var b = mode == Grad::Track ? tape.parameter(l.bias) : tape.constant(l.bias);
    h = apply(i + 1 == layers_.size() ? output_ : hidden_, linear(h, w, b));
  }
  return h;
}

Var Mlp::forward(Tape& tape, Var input, Grad mode) { return forward_impl(tape, input, mode); }

Var Mlp::forward(Tape& tape, Var input) const { return forward_impl(tape, input, Grad::Frozen); }

ParamList Mlp::parameters(const std::string& prefix) {
  ParamList out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    out.push_back({fmt::format("{}.{}.weight", prefix, i), &layers_[i].weight});
    out.push_back({fmt::format("{}.{}.bias", prefix, i), &layers_[i].bias});
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

bool Mlp::operator==(const Mlp& other) const {
  if (sizes_ != other.sizes_ || hidden_ != other.hidden_ || output_ != other.output_) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!(layers_[i].weight == other.layers_[i].weight) ||
        !(layers_[i].bias == other.layers_[i].bias)) {
      return false;
    }
  }
  return true;
}

namespace {

void check_pairing(const ParamList& a, const ParamList& b, const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(fmt::format("{}: {} vs {} parameters", op, a.size(), b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].tensor->shape() != b[i].tensor->shape()) {
      throw DimensionError(fmt::format("{}: {} {} vs {} {}", op, a[i].name,
                                       shape_string(a[i].tensor->shape()), b[i].name,
                                       shape_string(b[i].tensor->shape())));
    }
  }
}

}  // namespace

void polyak_update(const ParamList& target, const ParamList& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ConfigError(fmt::format("polyak tau must lie in (0, 1], got {}", tau));
  }
  check_pairing(target, online, "polyak_update");
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto t = target[i].tensor->data();
    auto o = online[i].tensor->data();
    if (tau == 1.0) {
      std::copy(o.begin(), o.end(), t.begin());
      continue;
    }
    for (std::size_t k = 0; k < t.size(); ++k) t[k] += tau * (o[k] - t[k]);
  }
}

void copy_parameters(const ParamList& dst, const ParamList& src) {
  check_pairing(dst, src, "copy_parameters");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto s = src[i].tensor->data();
    std::copy(s.begin(), s.end(), dst[i].tensor->data().begin());
  }
}

}  // namespace dexgrasp::nn
