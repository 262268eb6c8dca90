#pragma once

#include "dexgrasp/agent/networks.hpp"
#include "dexgrasp/demo/trajectory.hpp"
#include "dexgrasp/nn/adam.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace dexgrasp::agent {

struct BcConfig {
  int epochs = 5000;
  int batch_size = 512;
  double learning_rate = 7.3e-4;
  double target_mse = 1e-3;        // early stop on the epoch's training loss
  double holdout_fraction = 0.1;

  void validate() const;
};

void to_json(nlohmann::json& j, const BcConfig& c);
void from_json(const nlohmann::json& j, BcConfig& c);

struct BcResult {
  std::vector<double> train_loss;    // mean batch loss per epoch
  std::vector<double> holdout_loss;  // after each epoch; empty when nothing is held out
  double initial_train_loss = 0.0;
  double initial_holdout_loss = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
  std::size_t train_pairs = 0;
  std::size_t holdout_pairs = 0;
};

/// mean over rows of sum_j (tanh(mean_j(s)) - a_j)^2, tape-free.
double bc_loss(const PolicyNet& actor, const Matrix& states, const Matrix& actions);

/// Records the same loss on a tape, tracking the trunk and mean head.
Var bc_loss(Tape& tape, PolicyNet& actor, const Matrix& states, const Matrix& actions);

/// Regresses the actor's greedy action onto the expert actions. Only the trunk
/// and mean head change; the log-scale head is untouched. Throws NumericError
/// naming the epoch and batch on a non-finite loss.
BcResult pretrain(PolicyNet& actor, const demo::DemoSet& demos, const BcConfig& cfg,
                  std::uint64_t seed);

}  // namespace dexgrasp::agent
