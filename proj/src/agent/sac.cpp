#include "dexgrasp/agent/sac.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dexgrasp::agent {

void SacConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError(fmt::format("gamma {} not in (0,1)", gamma));
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0,1]");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (updates_per_env_step < 0) throw ConfigError("updates_per_env_step must be >= 0");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (replay_capacity == 0) throw ConfigError("replay_capacity must be positive");
}

void to_json(nlohmann::json& j, const SacConfig& c) {
  j = {{"gamma", c.gamma},
       {"alpha", c.alpha},
       {"tau", c.tau},
       {"batch_size", c.batch_size},
       {"actor_lr", c.actor_lr},
       {"critic_lr", c.critic_lr},
       {"updates_per_env_step", c.updates_per_env_step},
       {"warmup_steps", c.warmup_steps},
       {"replay_capacity", c.replay_capacity}};
}

void from_json(const nlohmann::json& j, SacConfig& c) {
  c.gamma = j.value("gamma", c.gamma);
  c.alpha = j.value("alpha", c.alpha);
  c.tau = j.value("tau", c.tau);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.actor_lr = j.value("actor_lr", c.actor_lr);
  c.critic_lr = j.value("critic_lr", c.critic_lr);
  c.updates_per_env_step = j.value("updates_per_env_step", c.updates_per_env_step);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
  c.validate();
}

Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Matrix target_q(const Batch& batch, const QNet& target1, const QNet& target2,
                const PolicyNet& actor, const SacConfig& cfg, const Matrix& eps) {
  Matrix next_action, next_log_prob;
  actor.sample(batch.next_states, eps, next_action, next_log_prob);
  const Matrix q1 = target1.q(batch.next_states, next_action);
  const Matrix q2 = target2.q(batch.next_states, next_action);
  const Matrix soft = q1.cwiseMin(q2) - cfg.alpha * next_log_prob;
  const Matrix live = (1.0 - batch.dones.array()).matrix();
  return batch.rewards + cfg.gamma * live.cwiseProduct(soft);
}

double critic_loss_and_grad(QNet& critic, const Batch& batch, const Matrix& target) {
  if (target.rows() != batch.states.rows() || target.cols() != 1) {
    throw DimensionError(fmt::format("critic target is {}x{}, expected {}x1", target.rows(),
                                     target.cols(), batch.states.rows()));
  }
  Tape tape;
  const Var q = critic.q(tape, tape.constant(batch.states), tape.constant(batch.actions),
                         Grad::Track);
  const Var loss = nn::scale(nn::mean(nn::square(nn::sub(q, tape.constant(target)))), 0.5);
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) throw NumericError(fmt::format("critic loss is {}", value));
  tape.backward(loss);
  return value;
}

CriticLosses critic_update(QNet& q1, nn::AdamState& opt1, QNet& q2, nn::AdamState& opt2,
                           const Batch& batch, const Matrix& target) {
  CriticLosses out;
  const nn::ParamList p1 = q1.parameters("q1");
  const nn::ParamList p2 = q2.parameters("q2");
  nn::zero_grads(p1);
  nn::zero_grads(p2);
  out.q1 = critic_loss_and_grad(q1, batch, target);
  out.q2 = critic_loss_and_grad(q2, batch, target);
  nn::adam_step(p1, opt1);
  nn::adam_step(p2, opt2);
  return out;
}

ActorLosses actor_loss_and_grad(PolicyNet& actor, const Matrix& states, const Matrix& eps,
                                const QNet& q1, const QNet& q2, const SacConfig& cfg, double xi4,
                                const AuxLoss& aux) {
  Tape tape;
  const Var s = tape.constant(states);
  const PolicySample pi = actor.sample(tape, s, eps, Grad::Track);
  const Var q = nn::minimum(q1.q(tape, s, pi.action), q2.q(tape, s, pi.action));
  const Var base = nn::mean(nn::sub(nn::scale(pi.log_prob, cfg.alpha), q));
  Var total = base;
  ActorLosses out;
  if (aux) {
    const Var extra = aux(tape);
    out.aux = extra.value()(0, 0);
    total = nn::add(base, nn::scale(extra, xi4));
  }
  out.base = base.value()(0, 0);
  out.total = total.value()(0, 0);
  out.entropy = -pi.log_prob.value().mean();
  if (!std::isfinite(out.total)) throw NumericError(fmt::format("actor loss is {}", out.total));
  nn::zero_grads(actor.parameters());
  tape.backward(total);
  return out;
}

ActorLosses actor_update(PolicyNet& actor, nn::AdamState& opt, const Matrix& states,
                         const Matrix& eps, const QNet& q1, const QNet& q2, const SacConfig& cfg,
                         double xi4, const AuxLoss& aux) {
  const ActorLosses out = actor_loss_and_grad(actor, states, eps, q1, q2, cfg, xi4, aux);
  nn::adam_step(actor.parameters(), opt);
  return out;
}

}  // namespace dexgrasp::agent
