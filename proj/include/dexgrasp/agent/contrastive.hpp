#pragma once

#include "dexgrasp/agent/networks.hpp"
#include "dexgrasp/nn/adam.hpp"

#include <nlohmann/json.hpp>

#include <string_view>

namespace dexgrasp::agent {

/// paper: softmax over the B positive-pair similarities only.
/// standard: InfoNCE over all expert/actor cross pairs.
enum class ClMode { Paper, Standard };
std::string_view to_string(ClMode m);
ClMode cl_mode_from_string(std::string_view s);

struct ClConfig {
  double tau_cl = 0.1;
  double xi4 = 0.5;
  ClMode mode = ClMode::Paper;
  double head_lr = 7.3e-4;
  std::size_t feature_dim = 128;

  void validate() const;
};

void to_json(nlohmann::json& j, const ClConfig& c);
void from_json(const nlohmann::json& j, ClConfig& c);

/// Maps concatenated (state, action) rows to the latent space.
class ProjectionHead {
 public:
  ProjectionHead() = default;
  ProjectionHead(std::mt19937_64& rng, const ClConfig& cfg = {}, const NetworkShape& shape = {});

  Var embed(Tape& tape, Var states, Var actions, Grad mode);
  Var embed(Tape& tape, Var states, Var actions) const;
  Matrix embed(const Matrix& states, const Matrix& actions) const;

  nn::ParamList parameters(const std::string& prefix = "head");

  nn::Mlp net;

  bool operator==(const ProjectionHead&) const = default;
};

/// Cosine-similarity contrastive loss between row-aligned expert and actor
/// embeddings (row j of each is a positive pair). Throws NumericError naming
/// the row when an embedding has norm below 1e-12.
Var contrastive_loss(Var expert, Var actor, double tau, ClMode mode);
double contrastive_loss(const Matrix& expert, const Matrix& actor, double tau, ClMode mode);

/// One Adam step on the head with the actor frozen. Actor actions are
/// reparameterized samples at the expert states using `eps`. Returns the loss.
double head_update(ProjectionHead& head, nn::AdamState& opt, const Matrix& expert_states,
                   const Matrix& expert_actions, const PolicyNet& actor, const Matrix& eps,
                   const ClConfig& cfg);

/// Records the contrastive loss on an actor tape: actor tracked, head frozen.
Var actor_contrastive_term(Tape& tape, PolicyNet& actor, const ProjectionHead& head,
                           const Matrix& expert_states, const Matrix& expert_actions,
                           const Matrix& eps, const ClConfig& cfg);

}  // namespace dexgrasp::agent
