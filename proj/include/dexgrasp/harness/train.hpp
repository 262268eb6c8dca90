#pragma once

#include "dexgrasp/agent/bc.hpp"
#include "dexgrasp/harness/config.hpp"
#include "dexgrasp/harness/evaluate.hpp"
#include "dexgrasp/harness/learner.hpp"
#include "dexgrasp/harness/metrics.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace dexgrasp::harness {

struct RunResult {
  std::filesystem::path run_dir;
  std::vector<IterationMetrics> metrics;
  std::optional<agent::BcResult> bc;
  double wall_seconds = 0.0;
};

/// Called after each iteration's evaluation (iteration 0 is the pre-RL policy).
using IterationHook = std::function<void(const IterationMetrics&, const Learner&)>;

/// Seed of the BC stage inside a run.
std::uint64_t bc_seed(std::uint64_t run_seed);
/// Seed of the per-iteration evaluation episodes.
std::uint64_t eval_seed(std::uint64_t run_seed);

/// Loads the demonstrations a method needs. Throws ConfigError when the file
/// is missing or holds no pairs.
demo::DemoSet load_demos_for(const RunConfig& cfg);

/// Runs BC (unless method=sac) and then `total_iterations` iterations of
/// rollout and per-step updates, evaluating greedily after each. Writes
/// config.json, metrics.csv, report.json, bc.ckpt (bc methods), last.ckpt
/// (training state), final.ckpt (deployment, actor only) and
/// checkpoints/iter_NNNN.ckpt every `checkpoint_every` iterations.
RunResult train(const RunConfig& cfg, const IterationHook& hook = {});

}  // namespace dexgrasp::harness
