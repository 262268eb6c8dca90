#pragma once

#include "dexgrasp/agent/bc.hpp"
#include "dexgrasp/agent/contrastive.hpp"
#include "dexgrasp/agent/sac.hpp"
#include "dexgrasp/env/scene.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dexgrasp::harness {

/// sac: scratch SAC. bc_sac: BC pretraining then SAC. bc_sac_cl: adds the
/// contrastive head and its actor term.
enum class Method { Sac, BcSac, BcSacCl };
std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

inline bool uses_bc(Method m) { return m != Method::Sac; }
inline bool uses_head(Method m) { return m == Method::BcSacCl; }

struct RunConfig {
  env::Task task = env::Task::Ball;
  std::uint64_t seed = 1;
  Method method = Method::BcSacCl;
  int total_iterations = 50;
  int steps_per_iteration = 2000;
  int eval_episodes = 100;
  /// Write a training checkpoint every this many iterations (0: final only).
  int checkpoint_every = 0;
  bool checkpoint_replay = false;
  std::filesystem::path demos_path;
  std::filesystem::path output_dir = "runs/run";

  env::SceneConfig scene;
  agent::SacConfig sac;
  agent::BcConfig bc;
  agent::ClConfig cl;

  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& c);

}  // namespace dexgrasp::harness
