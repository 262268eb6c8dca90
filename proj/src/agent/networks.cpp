#include "dexgrasp/agent/networks.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace dexgrasp::agent {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const NetworkShape& shape, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), shape.hidden.begin(), shape.hidden.end());
  if (out) sizes.push_back(out);
  return sizes;
}

void check_eps(const Matrix& eps, Eigen::Index rows) {
  if (eps.rows() != rows || eps.cols() != kActionDim) {
    throw DimensionError(fmt::format("policy noise is {}x{}, expected {}x{}", eps.rows(),
                                     eps.cols(), rows, kActionDim));
  }
}

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kLog2 = std::log(2.0);

}  // namespace

PolicyNet::PolicyNet(std::mt19937_64& rng, const NetworkShape& shape)
    : trunk(layer_sizes(kStateDim, shape, 0), shape.activation, shape.activation, rng),
      mean_head({shape.hidden.back(), kActionDim}, nn::Activation::Identity,
                nn::Activation::Identity, rng),
      log_scale_head({shape.hidden.back(), kActionDim}, nn::Activation::Identity,
                     nn::Activation::Identity, rng) {
  // log scale starts at exp(-1) everywhere.
  auto& head = log_scale_head.layers().front();
  std::fill(head.weight.data().begin(), head.weight.data().end(), 0.0);
  std::fill(head.bias.data().begin(), head.bias.data().end(), -1.0);
}

PolicySample PolicyNet::sample_impl(Tape& tape, Var states, const Matrix& eps, Grad mode) const {
  check_eps(eps, states.rows());
  auto& self = const_cast<PolicyNet&>(*this);
  const bool track = mode == Grad::Track;
  const Var h = track ? self.trunk.forward(tape, states, Grad::Track) : trunk.forward(tape, states);
  const Var mean =
      track ? self.mean_head.forward(tape, h, Grad::Track) : mean_head.forward(tape, h);
  const Var raw = track ? self.log_scale_head.forward(tape, h, Grad::Track)
                        : log_scale_head.forward(tape, h);
  const Var log_scale = nn::clamp(raw, kLogScaleMin, kLogScaleMax);
  const Var e = tape.constant(eps);
  const Var u = nn::add(mean, nn::mul(nn::exp(log_scale), e));
  const Var action = nn::tanh(u);

  // log N(u; mean, scale^2) - sum log(1 - tanh(u)^2), with
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).
  const Matrix base = (-0.5 * eps.array().square() - kHalfLog2Pi - 2.0 * kLog2).matrix();
  Var per_dim = nn::sub(tape.constant(base), log_scale);
  per_dim = nn::add(per_dim, nn::scale(u, 2.0));
  per_dim = nn::add(per_dim, nn::scale(nn::softplus(nn::scale(u, -2.0)), 2.0));
  return {action, nn::row_sum(per_dim), mean, log_scale};
}

PolicySample PolicyNet::sample(Tape& tape, Var states, const Matrix& eps, Grad mode) {
  return sample_impl(tape, states, eps, mode);
}

PolicySample PolicyNet::sample(Tape& tape, Var states, const Matrix& eps) const {
  return sample_impl(tape, states, eps, Grad::Frozen);
}

Matrix squashed_log_prob(const Matrix& eps, const Matrix& log_scale, const Matrix& u) {
  Matrix per_dim = (-0.5 * eps.array().square() - kHalfLog2Pi - 2.0 * kLog2).matrix();
  per_dim -= log_scale;
  per_dim += 2.0 * u;
  const Eigen::ArrayXXd v = -2.0 * u.array();
  per_dim += (2.0 * (v.max(0.0) + (-v.abs()).exp().log1p())).matrix();
  return per_dim.rowwise().sum();
}

void PolicyNet::sample(const Matrix& states, const Matrix& eps, Matrix& action,
                       Matrix& log_prob) const {
  check_eps(eps, states.rows());
  const Matrix h = trunk.forward(states);
  const Matrix mean = mean_head.forward(h);
  const Matrix log_scale = log_scale_head.forward(h).cwiseMax(kLogScaleMin).cwiseMin(kLogScaleMax);
  const Matrix u = mean + (log_scale.array().exp() * eps.array()).matrix();
  action = u.array().tanh().matrix();
  log_prob = squashed_log_prob(eps, log_scale, u);
}

Matrix PolicyNet::mean_action(const Matrix& states) const {
  return mean_head.forward(trunk.forward(states)).array().tanh().matrix();
}

Var PolicyNet::mean_action(Tape& tape, Var states, Grad mode) {
  const Var h = trunk.forward(tape, states, mode);
  return nn::tanh(mean_head.forward(tape, h, mode));
}

nn::ParamList PolicyNet::parameters(const std::string& prefix) {
  nn::ParamList out = mean_parameters(prefix);
  for (auto& p : log_scale_head.parameters(prefix + ".log_scale")) out.push_back(p);
  return out;
}

nn::ParamList PolicyNet::mean_parameters(const std::string& prefix) {
  nn::ParamList out = trunk.parameters(prefix + ".trunk");
  for (auto& p : mean_head.parameters(prefix + ".mean")) out.push_back(p);
  return out;
}

QNet::QNet(std::mt19937_64& rng, const NetworkShape& shape)
    : net(layer_sizes(kStateDim + kActionDim, shape, 1), shape.activation,
          nn::Activation::Identity, rng) {}

Var QNet::q(Tape& tape, Var states, Var actions, Grad mode) {
  return net.forward(tape, nn::concat_cols(states, actions), mode);
}

Var QNet::q(Tape& tape, Var states, Var actions) const {
  return net.forward(tape, nn::concat_cols(states, actions));
}

Matrix QNet::q(const Matrix& states, const Matrix& actions) const {
  if (states.rows() != actions.rows()) {
    throw DimensionError(fmt::format("critic input rows differ: {} states vs {} actions",
                                     states.rows(), actions.rows()));
  }
  Matrix x(states.rows(), states.cols() + actions.cols());
  x << states, actions;
  return net.forward(x);
}

nn::ParamList QNet::parameters(const std::string& prefix) { return net.parameters(prefix); }

}  // namespace dexgrasp::agent
