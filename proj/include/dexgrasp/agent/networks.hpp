#pragma once

#include "dexgrasp/nn/mlp.hpp"
#include "dexgrasp/nn/tape.hpp"

#include <random>
#include <string>

namespace dexgrasp::agent {

using nn::Grad;
using nn::Matrix;
using nn::Tape;
using nn::Var;

inline constexpr int kStateDim = 20;
inline constexpr int kActionDim = 8;
inline constexpr double kLogScaleMin = -5.0;
inline constexpr double kLogScaleMax = 2.0;

struct NetworkShape {
  std::vector<std::size_t> hidden{256, 256};
  nn::Activation activation = nn::Activation::Relu;
};

struct PolicySample {
  Var action;    // B x 8, tanh(u)
  Var log_prob;  // B x 1
  Var mean;      // B x 8, pre-squash
  Var log_scale; // B x 8, clamped
};

/// Squashed Gaussian actor: shared trunk, separate mean and log-scale heads.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(std::mt19937_64& rng, const NetworkShape& shape = {});

  /// a = tanh(mean + exp(log_scale) * eps), reparameterized.
  PolicySample sample(Tape& tape, Var states, const Matrix& eps, Grad mode);
  PolicySample sample(Tape& tape, Var states, const Matrix& eps) const;

  /// Tape-free sample; `log_prob` is B x 1.
  void sample(const Matrix& states, const Matrix& eps, Matrix& action, Matrix& log_prob) const;
  /// tanh of the mean head (greedy action).
  Matrix mean_action(const Matrix& states) const;

  /// Records tanh(mean) on the tape; only trunk and mean head are tracked.
  Var mean_action(Tape& tape, Var states, Grad mode);

  nn::ParamList parameters(const std::string& prefix = "actor");
  /// Trunk and mean head only; the log-scale head is excluded.
  nn::ParamList mean_parameters(const std::string& prefix = "actor");

  nn::Mlp trunk;
  nn::Mlp mean_head;
  nn::Mlp log_scale_head;

  bool operator==(const PolicyNet&) const = default;

 private:
  PolicySample sample_impl(Tape& tape, Var states, const Matrix& eps, Grad mode) const;
};

/// log prob of a squashed Gaussian given eps, log_scale and pre-squash u,
/// evaluated tape-free (rows of the B x 8 inputs).
Matrix squashed_log_prob(const Matrix& eps, const Matrix& log_scale, const Matrix& u);

/// Twin critic: Q(s, a) from the concatenated [state | action] row.
class QNet {
 public:
  QNet() = default;
  QNet(std::mt19937_64& rng, const NetworkShape& shape = {});

  Var q(Tape& tape, Var states, Var actions, Grad mode);
  Var q(Tape& tape, Var states, Var actions) const;
  /// B x 1
  Matrix q(const Matrix& states, const Matrix& actions) const;

  nn::ParamList parameters(const std::string& prefix);

  nn::Mlp net;

  bool operator==(const QNet&) const = default;
};

}  // namespace dexgrasp::agent
