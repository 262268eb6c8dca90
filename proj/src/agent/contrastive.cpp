#include "dexgrasp/agent/contrastive.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dexgrasp::agent {

std::string_view to_string(ClMode m) { return m == ClMode::Paper ? "paper" : "standard"; }

ClMode cl_mode_from_string(std::string_view s) {
  if (s == "paper") return ClMode::Paper;
  if (s == "standard") return ClMode::Standard;
  throw ConfigError(fmt::format("unknown contrastive mode '{}' (expected paper|standard)", s));
}

void ClConfig::validate() const {
  if (!(tau_cl > 0.0)) throw ConfigError("tau_cl must be positive");
  if (!(xi4 >= 0.0)) throw ConfigError("xi4 must be >= 0");
  if (!(head_lr > 0.0)) throw ConfigError("head_lr must be positive");
  if (feature_dim == 0) throw ConfigError("feature_dim must be positive");
}

void to_json(nlohmann::json& j, const ClConfig& c) {
  j = {{"tau_cl", c.tau_cl},
       {"xi4", c.xi4},
       {"denominator_mode", to_string(c.mode)},
       {"head_lr", c.head_lr},
       {"feature_dim", c.feature_dim}};
}

void from_json(const nlohmann::json& j, ClConfig& c) {
  c.tau_cl = j.value("tau_cl", c.tau_cl);
  c.xi4 = j.value("xi4", c.xi4);
  if (j.contains("denominator_mode")) {
    c.mode = cl_mode_from_string(j["denominator_mode"].get<std::string>());
  }
  c.head_lr = j.value("head_lr", c.head_lr);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.validate();
}

ProjectionHead::ProjectionHead(std::mt19937_64& rng, const ClConfig& cfg,
                               const NetworkShape& shape) {
  std::vector<std::size_t> sizes{kStateDim + kActionDim};
  sizes.insert(sizes.end(), shape.hidden.begin(), shape.hidden.end());
  sizes.push_back(cfg.feature_dim);
  net = nn::Mlp(sizes, shape.activation, nn::Activation::Identity, rng);
}

Var ProjectionHead::embed(Tape& tape, Var states, Var actions, Grad mode) {
  return net.forward(tape, nn::concat_cols(states, actions), mode);
}

Var ProjectionHead::embed(Tape& tape, Var states, Var actions) const {
  return net.forward(tape, nn::concat_cols(states, actions));
}

Matrix ProjectionHead::embed(const Matrix& states, const Matrix& actions) const {
  if (states.rows() != actions.rows()) {
    throw DimensionError(fmt::format("projection input rows differ: {} states vs {} actions",
                                     states.rows(), actions.rows()));
  }
  Matrix x(states.rows(), states.cols() + actions.cols());
  x << states, actions;
  return net.forward(x);
}

nn::ParamList ProjectionHead::parameters(const std::string& prefix) {
  return net.parameters(prefix);
}

Var contrastive_loss(Var expert, Var actor, double tau, ClMode mode) {
  if (expert.rows() != actor.rows() || expert.cols() != actor.cols()) {
    throw DimensionError(fmt::format("contrastive inputs {}x{} vs {}x{}", expert.rows(),
                                     expert.cols(), actor.rows(), actor.cols()));
  }
  if (expert.rows() < 1) throw ContractViolation("contrastive loss needs at least one pair");
  const Var e = nn::row_normalize(expert);
  const Var a = nn::row_normalize(actor);
  const Var positive = nn::scale(nn::row_dot(e, a), 1.0 / tau);  // B x 1
  if (mode == ClMode::Paper) {
    return nn::sub(nn::logsumexp(positive), nn::mean(positive));
  }
  const Var all = nn::scale(nn::matmul_nt(e, a), 1.0 / tau);  // B x B
  return nn::mean(nn::sub(nn::logsumexp_rows(all), positive));
}

double contrastive_loss(const Matrix& expert, const Matrix& actor, double tau, ClMode mode) {
  Tape tape;
  return contrastive_loss(tape.constant(expert), tape.constant(actor), tau, mode).value()(0, 0);
}

double head_update(ProjectionHead& head, nn::AdamState& opt, const Matrix& expert_states,
                   const Matrix& expert_actions, const PolicyNet& actor, const Matrix& eps,
                   const ClConfig& cfg) {
  Matrix actor_actions, unused;
  actor.sample(expert_states, eps, actor_actions, unused);

  Tape tape;
  const Var s = tape.constant(expert_states);
  const Var h_expert = head.embed(tape, s, tape.constant(expert_actions), Grad::Track);
  const Var h_actor = head.embed(tape, s, tape.constant(actor_actions), Grad::Track);
  const Var loss = contrastive_loss(h_expert, h_actor, cfg.tau_cl, cfg.mode);
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) throw NumericError(fmt::format("contrastive loss is {}", value));
  const nn::ParamList params = head.parameters();
  nn::zero_grads(params);
  tape.backward(loss);
  nn::adam_step(params, opt);
  return value;
}

Var actor_contrastive_term(Tape& tape, PolicyNet& actor, const ProjectionHead& head,
                           const Matrix& expert_states, const Matrix& expert_actions,
                           const Matrix& eps, const ClConfig& cfg) {
  const Var s = tape.constant(expert_states);
  const PolicySample pi = actor.sample(tape, s, eps, Grad::Track);
  const Var h_expert = head.embed(tape, s, tape.constant(expert_actions));
  const Var h_actor = head.embed(tape, s, pi.action);
  return contrastive_loss(h_expert, h_actor, cfg.tau_cl, cfg.mode);
}

}  // namespace dexgrasp::agent
