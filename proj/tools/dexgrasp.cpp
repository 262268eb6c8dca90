// Command-line front end: demo collection, BC, training, evaluation,
// ablation and the teleop server.

#include "dexgrasp/agent/bc.hpp"
#include "dexgrasp/demo/expert.hpp"
#include "dexgrasp/harness/ablation.hpp"
#include "dexgrasp/harness/teleop.hpp"
#include "dexgrasp/harness/train.hpp"
#include "dexgrasp/random.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

using namespace dexgrasp;
using namespace dexgrasp::harness;

namespace {

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dexgrasp: BC + SAC + contrastive grasping experiments"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // collect
  auto* collect = app.add_subcommand("collect", "record scripted-expert demonstrations");
  std::string c_task = "ball", c_out = "demos.jsonl";
  int c_n = 15;
  double c_noise = 0.05;
  std::uint64_t c_seed = 1;
  collect->add_option("--task", c_task)->check(CLI::IsMember({"ball", "bottle"}));
  collect->add_option("--n", c_n)->check(CLI::PositiveNumber);
  collect->add_option("--noise", c_noise)->check(CLI::Range(0.0, 0.2));
  collect->add_option("--seed", c_seed);
  collect->add_option("--out", c_out);

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "behavior cloning on a demo file");
  std::string p_demos, p_config, p_out = "bc.ckpt";
  pretrain->add_option("--demos", p_demos)->required()->check(CLI::ExistingFile);
  pretrain->add_option("--config", p_config)->check(CLI::ExistingFile);
  pretrain->add_option("--out", p_out);

  // train
  auto* train_cmd = app.add_subcommand("train", "run BC (if any) and SAC fine-tuning");
  std::string t_config, t_method, t_demos, t_out;
  std::optional<int> t_iters, t_steps;
  std::optional<std::uint64_t> t_seed;
  train_cmd->add_option("--config", t_config)->check(CLI::ExistingFile);
  train_cmd->add_option("--method", t_method)->check(CLI::IsMember({"sac", "bc_sac", "bc_sac_cl"}));
  train_cmd->add_option("--demos", t_demos);
  train_cmd->add_option("--out", t_out);
  train_cmd->add_option("--iterations", t_iters);
  train_cmd->add_option("--steps", t_steps, "env steps per iteration");
  train_cmd->add_option("--seed", t_seed);

  // eval
  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  std::string e_ckpt, e_task = "ball", e_trace, e_config;
  int e_episodes = 100;
  std::uint64_t e_seed = 1;
  bool e_expert = false;
  eval->add_option("--checkpoint", e_ckpt)->check(CLI::ExistingFile);
  eval->add_flag("--expert", e_expert, "evaluate the scripted expert instead");
  eval->add_option("--episodes", e_episodes);
  eval->add_option("--task", e_task)->check(CLI::IsMember({"ball", "bottle"}));
  eval->add_option("--seed", e_seed);
  eval->add_option("--trace", e_trace, "per-step JSONL trace");
  eval->add_option("--config", e_config, "scene settings")->check(CLI::ExistingFile);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "sac vs bc_sac vs bc_sac_cl over seeds");
  std::string a_config, a_out;
  std::vector<std::uint64_t> a_seeds{1, 2, 3, 4, 5};
  ablate->add_option("--config", a_config)->check(CLI::ExistingFile);
  ablate->add_option("--seeds", a_seeds)->delimiter(',');
  ablate->add_option("--out", a_out);

  // serve
  auto* serve = app.add_subcommand("serve", "websocket teleoperation server");
  TeleopConfig s_cfg;
  std::string s_task = "ball";
  serve->add_option("--port", s_cfg.port);
  serve->add_option("--address", s_cfg.address);
  serve->add_option("--task", s_task)->check(CLI::IsMember({"ball", "bottle"}));
  serve->add_option("--seed", s_cfg.seed);
  serve->add_option("--out", s_cfg.output_dir);
  serve->add_option("--tick-hz", s_cfg.tick_hz);
  serve->add_flag("--keep-failures", s_cfg.keep_failures);

  // defaults
  auto* defaults = app.add_subcommand("defaults", "print the default run configuration");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*collect) {
      const demo::DemoSet set =
          demo::collect_demos(c_n, env::task_from_string(c_task), c_noise, c_seed);
      demo::save(set, c_out);
      double len = 0;
      for (const auto& t : set.trajectories()) len += static_cast<double>(t.steps.size());
      fmt::print("wrote {} trajectories ({} pairs, mean length {:.1f}) to {}\n",
                 set.trajectories().size(), set.num_pairs(), len / c_n, c_out);
    } else if (*pretrain) {
      const RunConfig cfg = config_or_default(p_config);
      Learner learner(cfg, cfg.seed);
      const auto res =
          agent::pretrain(learner.actor, demo::load(p_demos), cfg.bc, bc_seed(cfg.seed));
      nn::save_checkpoint(p_out, deployment_checkpoint(learner.actor, cfg, "bc"));
      fmt::print("{} epochs: train {:.4g} -> {:.4g}, held-out {:.4g} -> {:.4g}; wrote {}\n",
                 res.epochs_run, res.initial_train_loss,
                 res.train_loss.empty() ? res.initial_train_loss : res.train_loss.back(),
                 res.initial_holdout_loss,
                 res.holdout_loss.empty() ? res.initial_holdout_loss : res.holdout_loss.back(),
                 p_out);
    } else if (*train_cmd) {
      RunConfig cfg = config_or_default(t_config);
      if (!t_method.empty()) cfg.method = method_from_string(t_method);
      if (!t_demos.empty()) cfg.demos_path = t_demos;
      if (!t_out.empty()) cfg.output_dir = t_out;
      if (t_iters) cfg.total_iterations = *t_iters;
      if (t_steps) cfg.steps_per_iteration = *t_steps;
      if (t_seed) cfg.seed = *t_seed;
      const RunResult r = harness::train(cfg);
      fmt::print("final success {:.2f}, mean reward {:.1f}, {:.0f}s; outputs in {}\n",
                 r.metrics.back().success_rate, r.metrics.back().mean_reward, r.wall_seconds,
                 r.run_dir.string());
    } else if (*eval) {
      const env::SceneConfig scene = config_or_default(e_config).scene;
      const env::Task task = env::task_from_string(e_task);
      EvalResult r;
      if (e_expert) {
        std::ofstream trace;
        if (!e_trace.empty()) trace.open(e_trace);
        r = evaluate(expert_policy(scene, task), scene, task, e_episodes, e_seed,
                     e_trace.empty() ? nullptr : &trace);
      } else {
        if (e_ckpt.empty()) throw ConfigError("eval needs --checkpoint or --expert");
        r = evaluate_checkpoint(e_ckpt, scene, task, e_episodes, e_seed, e_trace);
      }
      fmt::print("episodes {} success_rate {:.4f} mean_reward {:.3f}\n", e_episodes,
                 r.success_rate, r.mean_reward);
    } else if (*ablate) {
      RunConfig cfg = config_or_default(a_config);
      if (!a_out.empty()) cfg.output_dir = a_out;
      const AblationReport rep = run_ablation(cfg, a_seeds);
      for (const auto& s : rep.summaries) {
        fmt::print("{:10} runs {} median success {:.3f} median reward {:.1f} median iters-to-0.8 {}\n",
                   to_string(s.method), s.runs, s.median_final_success, s.median_final_reward,
                   s.median_iterations_to_threshold);
      }
      fmt::print("ordering {} head start {}\n", rep.ordering_holds ? "holds" : "fails",
                 rep.head_start_holds ? "holds" : "fails");
      for (const auto& w : rep.warnings) fmt::print("warning: {}\n", w);
    } else if (*serve) {
      s_cfg.task = env::task_from_string(s_task);
      s_cfg.handle_signals = true;
      TeleopServer server(s_cfg);
      server.run();
      for (const auto& p : server.saved()) fmt::print("saved {}\n", p.string());
    } else if (*defaults) {
      std::cout << nlohmann::json(RunConfig{}).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
