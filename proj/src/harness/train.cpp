#include "dexgrasp/harness/train.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>

namespace dexgrasp::harness {

namespace fs = std::filesystem;
using agent::Matrix;

std::uint64_t bc_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "bc"); }
std::uint64_t eval_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "eval"); }

demo::DemoSet load_demos_for(const RunConfig& cfg) {
  if (cfg.demos_path.empty()) {
    throw ConfigError(fmt::format("method {} needs a demonstration file (demos_path)",
                                  to_string(cfg.method)));
  }
  if (!fs::exists(cfg.demos_path)) {
    throw ConfigError(fmt::format("demonstration file {} not found", cfg.demos_path.string()));
  }
  demo::DemoSet demos = demo::load(cfg.demos_path);
  if (demos.empty()) {
    throw ConfigError(fmt::format("demonstration file {} holds no steps", cfg.demos_path.string()));
  }
  return demos;
}

namespace {

bool is_terminal(const env::SceneConfig& scene, env::Event e) {
  return e == env::Event::Success || e == env::Event::Collision ||
         (e == env::Event::Contact && scene.terminate_on_contact);
}

struct LossSums {
  UpdateLosses sum;
  std::int64_t n = 0;

  void add(const UpdateLosses& l) {
    sum.q1 += l.q1;
    sum.q2 += l.q2;
    sum.pi += l.pi;
    sum.cl += l.cl;
    sum.entropy += l.entropy;
    ++n;
  }
  void fill(IterationMetrics& m) const {
    if (n == 0) return;
    const double k = static_cast<double>(n);
    m.loss_q1 = sum.q1 / k;
    m.loss_q2 = sum.q2 / k;
    m.loss_pi = sum.pi / k;
    m.loss_cl = sum.cl / k;
    m.entropy = sum.entropy / k;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RunResult train(const RunConfig& cfg, const IterationHook& hook) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  RunResult result;
  result.run_dir = cfg.output_dir;

  demo::DemoSet demos;
  if (uses_bc(cfg.method)) demos = load_demos_for(cfg);

  fs::create_directories(cfg.output_dir);
  save_run_config(cfg.output_dir / "config.json", cfg);

  Learner learner(cfg, cfg.seed);

  if (uses_bc(cfg.method)) {
    result.bc = agent::pretrain(learner.actor, demos, cfg.bc, bc_seed(cfg.seed));
    nn::save_checkpoint(cfg.output_dir / "bc.ckpt", deployment_checkpoint(learner.actor, cfg, "bc"));
    spdlog::info("bc: {} epochs, train {:.4g}, held-out {:.4g}", result.bc->epochs_run,
                 result.bc->train_loss.empty() ? result.bc->initial_train_loss
                                               : result.bc->train_loss.back(),
                 result.bc->holdout_loss.empty() ? 0.0 : result.bc->holdout_loss.back());
  }

  const std::uint64_t evseed = eval_seed(cfg.seed);
  auto evaluate_now = [&](IterationMetrics& m) {
    const EvalResult ev =
        evaluate(greedy_policy(learner.actor), cfg.scene, cfg.task, cfg.eval_episodes, evseed);
    m.mean_reward = ev.mean_reward;
    m.success_rate = ev.success_rate;
  };

  auto record = [&](IterationMetrics m, double t_iter) {
    m.wall_seconds = t_iter;
    spdlog::info("iter {} steps {} success {:.2f} reward {:.1f} ({:.1f}s)", m.iter, m.env_steps,
                 m.success_rate, m.mean_reward, t_iter);
    result.metrics.push_back(m);
    write_metrics_csv(cfg.output_dir / "metrics.csv", result.metrics);
    if (hook) hook(m, learner);
  };

  {
    const auto t0 = std::chrono::steady_clock::now();
    IterationMetrics m;
    evaluate_now(m);
    record(m, seconds_since(t0));
  }

  env::GraspEnv env(cfg.scene);
  auto explore_rng = make_rng(cfg.seed, "train.explore");
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::uint64_t episode = 0;
  env::Observation obs = env.reset(derive_seed(cfg.seed, "train.episode", episode), cfg.task);
  std::int64_t env_steps = 0;

  for (int it = 1; it <= cfg.total_iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    LossSums losses;
    for (int k = 0; k < cfg.steps_per_iteration; ++k) {
      env::Action act;
      if (env_steps < cfg.sac.warmup_steps) {
        for (int j = 0; j < env::kActDim; ++j) act(j) = uniform(explore_rng);
      } else {
        const Matrix eps = agent::gaussian(1, agent::kActionDim, explore_rng);
        Matrix a, unused;
        learner.actor.sample(Matrix(obs.transpose()), eps, a, unused);
        act = a.row(0).transpose();
      }
      const env::StepResult r = env.step(act);
      agent::Transition t;
      t.state = obs;
      t.action = act;
      t.reward = r.reward.total;
      t.next_state = r.obs;
      t.done = r.done && is_terminal(cfg.scene, r.reward.event);
      learner.replay.push(t);
      ++env_steps;

      if (env_steps >= cfg.sac.warmup_steps &&
          learner.replay.size() >= static_cast<std::size_t>(cfg.sac.batch_size)) {
        for (int u = 0; u < cfg.sac.updates_per_env_step; ++u) {
          losses.add(update(learner, cfg, uses_head(cfg.method) ? &demos : nullptr));
        }
      }

      if (r.done) {
        ++episode;
        obs = env.reset(derive_seed(cfg.seed, "train.episode", episode), cfg.task);
      } else {
        obs = r.obs;
      }
    }

    IterationMetrics m;
    m.iter = it;
    m.env_steps = env_steps;
    m.updates = learner.updates;
    losses.fill(m);
    evaluate_now(m);
    if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) {
      fs::create_directories(cfg.output_dir / "checkpoints");
      nn::save_checkpoint(cfg.output_dir / "checkpoints" / fmt::format("iter_{:04d}.ckpt", it),
                          training_checkpoint(learner, cfg, it, env_steps, cfg.checkpoint_replay));
    }
    record(m, seconds_since(t0));
  }

  const int last_iter = cfg.total_iterations;
  nn::save_checkpoint(cfg.output_dir / "last.ckpt",
                      training_checkpoint(learner, cfg, last_iter, env_steps,
                                          cfg.checkpoint_replay));
  nn::save_checkpoint(cfg.output_dir / "final.ckpt",
                      deployment_checkpoint(learner.actor, cfg, "deploy"));

  result.wall_seconds = seconds_since(t_start);
  nlohmann::json report = {{"method", to_string(cfg.method)},
                           {"task", to_string(cfg.task)},
                           {"seed", cfg.seed},
                           {"iterations", cfg.total_iterations},
                           {"env_steps", env_steps},
                           {"updates", learner.updates},
                           {"final_success_rate", result.metrics.back().success_rate},
                           {"final_mean_reward", result.metrics.back().mean_reward},
                           {"wall_seconds", result.wall_seconds}};
  const auto to80 = iterations_to_threshold(result.metrics);
  report["iterations_to_0.8"] = to80 ? nlohmann::json(*to80) : nlohmann::json(nullptr);
  if (result.bc) {
    report["bc"] = {{"epochs_run", result.bc->epochs_run},
                    {"initial_train_loss", result.bc->initial_train_loss},
                    {"final_train_loss", result.bc->train_loss.empty()
                                             ? result.bc->initial_train_loss
                                             : result.bc->train_loss.back()},
                    {"initial_holdout_loss", result.bc->initial_holdout_loss},
                    {"final_holdout_loss", result.bc->holdout_loss.empty()
                                               ? result.bc->initial_holdout_loss
                                               : result.bc->holdout_loss.back()}};
  }
  std::ofstream(cfg.output_dir / "report.json") << report.dump(2) << '\n';
  return result;
}

}  // namespace dexgrasp::harness
