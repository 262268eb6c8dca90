#include "dexgrasp/harness/config.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <fstream>

namespace dexgrasp::harness {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Sac: return "sac";
    case Method::BcSac: return "bc_sac";
    case Method::BcSacCl: return "bc_sac_cl";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "sac") return Method::Sac;
  if (s == "bc_sac") return Method::BcSac;
  if (s == "bc_sac_cl") return Method::BcSacCl;
  throw ConfigError(fmt::format("unknown method '{}' (expected sac|bc_sac|bc_sac_cl)", s));
}

void RunConfig::validate() const {
  if (total_iterations < 0) throw ConfigError("total_iterations must be >= 0");
  if (steps_per_iteration <= 0) throw ConfigError("steps_per_iteration must be positive");
  if (eval_episodes <= 0) throw ConfigError("eval_episodes must be positive");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  scene.validate();
  sac.validate();
  bc.validate();
  cl.validate();
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"task", to_string(c.task)},
       {"seed", c.seed},
       {"method", to_string(c.method)},
       {"total_iterations", c.total_iterations},
       {"steps_per_iteration", c.steps_per_iteration},
       {"eval_episodes", c.eval_episodes},
       {"checkpoint_every", c.checkpoint_every},
       {"checkpoint_replay", c.checkpoint_replay},
       {"demos_path", c.demos_path.string()},
       {"output_dir", c.output_dir.string()},
       {"scene", c.scene},
       {"sac", c.sac},
       {"bc", c.bc},
       {"contrastive", c.cl}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  if (j.contains("task")) c.task = env::task_from_string(j["task"].get<std::string>());
  c.seed = j.value("seed", c.seed);
  if (j.contains("method")) c.method = method_from_string(j["method"].get<std::string>());
  c.total_iterations = j.value("total_iterations", c.total_iterations);
  c.steps_per_iteration = j.value("steps_per_iteration", c.steps_per_iteration);
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.checkpoint_replay = j.value("checkpoint_replay", c.checkpoint_replay);
  c.demos_path = j.value("demos_path", c.demos_path.string());
  c.output_dir = j.value("output_dir", c.output_dir.string());
  if (j.contains("scene")) j["scene"].get_to(c.scene);
  if (j.contains("sac")) j["sac"].get_to(c.sac);
  if (j.contains("bc")) j["bc"].get_to(c.bc);
  if (j.contains("contrastive")) j["contrastive"].get_to(c.cl);
  c.validate();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
    return j.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write config {}", path.string()));
  out << nlohmann::json(c).dump(2) << '\n';
}

}  // namespace dexgrasp::harness
