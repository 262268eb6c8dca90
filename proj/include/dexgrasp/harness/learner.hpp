#pragma once

#include "dexgrasp/agent/contrastive.hpp"
#include "dexgrasp/agent/networks.hpp"
#include "dexgrasp/agent/replay.hpp"
#include "dexgrasp/agent/sac.hpp"
#include "dexgrasp/demo/trajectory.hpp"
#include "dexgrasp/harness/config.hpp"
#include "dexgrasp/nn/checkpoint.hpp"

#include <filesystem>
#include <optional>
#include <random>

namespace dexgrasp::harness {

/// Losses from one gradient update.
struct UpdateLosses {
  double q1 = 0.0;
  double q2 = 0.0;
  double pi = 0.0;
  double cl = 0.0;
  double entropy = 0.0;
};

/// Everything that changes during training. Each consumer of randomness owns
/// its own stream so that switching the contrastive path off leaves the rest
/// of the run bit-identical.
struct Learner {
  Learner(const RunConfig& cfg, std::uint64_t seed);

  agent::PolicyNet actor;
  agent::QNet q1, q2, q1_target, q2_target;
  std::optional<agent::ProjectionHead> head;
  nn::AdamState actor_opt, q1_opt, q2_opt;
  std::optional<nn::AdamState> head_opt;
  agent::ReplayBuffer replay;

  std::mt19937_64 replay_rng;  // minibatch indices
  std::mt19937_64 noise_rng;   // reparameterization noise for target and actor
  std::mt19937_64 cl_rng;      // expert batches and noise for the contrastive path

  std::int64_t updates = 0;
};

/// One SAC update: target, critics, (head), actor with the optional
/// contrastive term, Polyak on both targets. `demos` may be null unless the
/// learner owns a head.
UpdateLosses update(Learner& l, const RunConfig& cfg, const demo::DemoSet* demos);

/// Full training state: five networks, optimizers, the replay cursor, and the
/// projection head flagged discardable. Replay contents only when asked.
nn::Checkpoint training_checkpoint(const Learner& l, const RunConfig& cfg, int iteration,
                                   std::int64_t env_steps, bool include_replay);

/// Actor only; the projection head and critics are dropped.
nn::Checkpoint deployment_checkpoint(const agent::PolicyNet& actor, const RunConfig& cfg,
                                     std::string_view phase);

/// Restores the actor from any checkpoint that holds one.
agent::PolicyNet actor_from_checkpoint(const nn::Checkpoint& ckpt);
agent::PolicyNet load_actor(const std::filesystem::path& path);

}  // namespace dexgrasp::harness
