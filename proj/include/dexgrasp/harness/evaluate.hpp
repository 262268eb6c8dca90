#pragma once

#include "dexgrasp/agent/networks.hpp"
#include "dexgrasp/demo/expert.hpp"
#include "dexgrasp/env/grasp_env.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <vector>

namespace dexgrasp::harness {

using Policy = std::function<env::Action(const env::Observation&)>;

/// tanh of the actor's mean head.
Policy greedy_policy(const agent::PolicyNet& actor);
/// The scripted expert without noise.
Policy expert_policy(const env::SceneConfig& scene, env::Task task,
                     const demo::ExpertConfig& cfg = {});

struct EpisodeSummary {
  std::uint64_t seed = 0;
  double total_reward = 0.0;
  int length = 0;
  env::Event final_event = env::Event::None;
};

struct EvalResult {
  double mean_reward = 0.0;
  double success_rate = 0.0;
  std::vector<EpisodeSummary> episodes;
};

/// Seed of evaluation episode i.
std::uint64_t eval_episode_seed(std::uint64_t seed, int i);

/// Runs `n_episodes` seeded episodes. Success means the episode ended on a
/// success event. When `trace` is set every step is written to it as one JSON
/// line {episode, seed, t, obs, action, reward_breakdown, event, done}. Throws ConfigError for
/// n_episodes <= 0.
EvalResult evaluate(const Policy& policy, const env::SceneConfig& scene, env::Task task,
                    int n_episodes, std::uint64_t seed, std::ostream* trace = nullptr);

/// Loads the actor from a checkpoint and evaluates it greedily, writing the
/// per-step trace to `trace_path` when non-empty.
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint,
                               const env::SceneConfig& scene, env::Task task, int n_episodes,
                               std::uint64_t seed, const std::filesystem::path& trace_path = {});

}  // namespace dexgrasp::harness
