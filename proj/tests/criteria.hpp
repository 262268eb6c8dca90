#pragma once

// Checks shared by the unit tests and the acceptance runner. Each returns a
// verdict plus a one-line summary of what was measured.

#include <cstdint>
#include <filesystem>
#include <string>

namespace dexgrasp::criteria {

struct Verdict {
  bool pass = false;
  std::string detail;
};

/// Autodiff vs central differences over critic, actor, BC and contrastive
/// losses on >= 20 random network/loss configurations (tolerance 1e-4 relative).
Verdict gradient_correctness(std::uint64_t seed = 1);

/// Event, pose and smoothness tables plus the decomposition invariant on
/// 1000 random rollouts, all with exact equality.
Verdict reward_oracles(std::uint64_t seed = 1);

/// Positive-pair loss vs a scalar brute force on 100 random batches, B=1, ties
/// and positive scaling.
Verdict contrastive_oracles(std::uint64_t seed = 1);

/// Twin-min, terminal masking, Polyak decay, gradient isolation and the
/// squashed-Gaussian density integrating to 1.
Verdict sac_mechanics(std::uint64_t seed = 1);

struct Phase1Options {
  std::uint64_t seed = 1;
  int demos = 15;
  int eval_episodes = 100;
  double max_holdout = 1e-2;
  double min_success = 0.4;
};
/// BC on scripted demos: held-out loss and greedy success.
Verdict phase1_efficacy(const Phase1Options& opt = {});

/// bc_sac_cl with xi4 = 0 against bc_sac, compared at every checkpoint.
Verdict ablation_switch_exactness(const std::filesystem::path& work_dir, int iterations = 2,
                                  int steps = 300);

/// Demo files, checkpoints and metrics CSVs round-trip byte for byte;
/// deployment checkpoints hold no projection-head tensors.
Verdict persistence(const std::filesystem::path& work_dir);

}  // namespace dexgrasp::criteria
