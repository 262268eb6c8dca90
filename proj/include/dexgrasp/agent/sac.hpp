#pragma once

#include "dexgrasp/agent/networks.hpp"
#include "dexgrasp/agent/replay.hpp"
#include "dexgrasp/nn/adam.hpp"

#include <nlohmann/json.hpp>

#include <functional>

namespace dexgrasp::agent {

struct SacConfig {
  double gamma = 0.98;
  double alpha = 1.0;
  double tau = 0.005;
  int batch_size = 512;
  double actor_lr = 7.3e-4;
  double critic_lr = 7.3e-4;
  int updates_per_env_step = 1;
  int warmup_steps = 1000;
  std::size_t replay_capacity = 300000;

  void validate() const;
};

void to_json(nlohmann::json& j, const SacConfig& c);
void from_json(const nlohmann::json& j, SacConfig& c);

/// Soft Bellman target r + gamma (1 - done) (min_i Qbar_i(s', a') - alpha log pi(a'|s')),
/// with a' drawn from the actor using `eps`. Tape-free, so nothing receives gradient.
Matrix target_q(const Batch& batch, const QNet& target1, const QNet& target2,
                const PolicyNet& actor, const SacConfig& cfg, const Matrix& eps);

/// 0.5 * mean((Q(s, a) - target)^2); accumulates d/dphi into the critic's gradients.
double critic_loss_and_grad(QNet& critic, const Batch& batch, const Matrix& target);

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
};

/// One Adam step on each critic against its own residual.
CriticLosses critic_update(QNet& q1, nn::AdamState& opt1, QNet& q2, nn::AdamState& opt2,
                           const Batch& batch, const Matrix& target);

/// Extra loss term recorded on the actor's tape (the contrastive term).
using AuxLoss = std::function<Var(Tape&)>;

struct ActorLosses {
  double total = 0.0;    // base + xi4 * aux
  double base = 0.0;     // mean(alpha log pi - min Q)
  double aux = 0.0;
  double entropy = 0.0;  // -mean(log pi)
};

/// Builds mean(alpha log pi(a|s) - min_i Q_i(s, a)) + xi4 * aux on a fresh tape with
/// reparameterized actions and backpropagates into the actor only.
ActorLosses actor_loss_and_grad(PolicyNet& actor, const Matrix& states, const Matrix& eps,
                                const QNet& q1, const QNet& q2, const SacConfig& cfg, double xi4,
                                const AuxLoss& aux = {});

ActorLosses actor_update(PolicyNet& actor, nn::AdamState& opt, const Matrix& states,
                         const Matrix& eps, const QNet& q1, const QNet& q2, const SacConfig& cfg,
                         double xi4, const AuxLoss& aux = {});

/// Standard normal noise.
Matrix gaussian(int rows, int cols, std::mt19937_64& rng);

}  // namespace dexgrasp::agent
