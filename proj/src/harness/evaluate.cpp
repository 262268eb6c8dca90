#include "dexgrasp/harness/evaluate.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/harness/learner.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>

#include <fstream>

namespace dexgrasp::harness {

Policy greedy_policy(const agent::PolicyNet& actor) {
  return [&actor](const env::Observation& obs) {
    const agent::Matrix a = actor.mean_action(agent::Matrix(obs.transpose()));
    return env::Action(a.row(0).transpose());
  };
}

Policy expert_policy(const env::SceneConfig& scene, env::Task task, const demo::ExpertConfig& cfg) {
  return [scene, task, cfg](const env::Observation& obs) {
    return demo::expert_action(scene, task, obs, cfg);
  };
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int i) {
  return derive_seed(seed, "eval.episode", static_cast<std::uint64_t>(i));
}

namespace {

template <typename V>
std::string join17(const V& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt::format("{:.17g}", v(i));
  }
  return s;
}

}  // namespace

EvalResult evaluate(const Policy& policy, const env::SceneConfig& scene, env::Task task,
                    int n_episodes, std::uint64_t seed, std::ostream* trace) {
  if (n_episodes <= 0) {
    throw ConfigError(fmt::format("evaluation needs at least one episode, got {}", n_episodes));
  }
  env::GraspEnv env(scene);
  EvalResult out;
  int successes = 0;
  double reward_sum = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    EpisodeSummary ep;
    ep.seed = eval_episode_seed(seed, i);
    env::Observation obs = env.reset(ep.seed, task);
    bool done = false;
    while (!done) {
      const env::Action act = policy(obs);
      if (act.size() != env::kActDim) {
        throw DimensionError(fmt::format("policy returned {} actions", act.size()));
      }
      const env::StepResult r = env.step(act);
      if (trace) {
        const env::RewardBreakdown& b = r.reward;
        *trace << fmt::format(
            "{{\"episode\":{},\"seed\":{},\"t\":{},\"obs\":[{}],\"action\":[{}],"
            "\"reward_breakdown\":{{\"distance\":{:.17g},\"smooth\":{:.17g},"
            "\"event\":{:.17g},\"pose\":{:.17g},\"total\":{:.17g},\"cos_psi\":{:.17g}}},"
            "\"event\":\"{}\",\"done\":{}}}\n",
            i, ep.seed, ep.length, join17(obs), join17(act), b.distance_term, b.smooth_term,
            b.event_term, b.pose_term, b.total, b.cos_psi, env::to_string(b.event), r.done);
      }
      ep.total_reward += r.reward.total;
      ep.final_event = r.reward.event;
      ++ep.length;
      done = r.done;
      obs = r.obs;
    }
    if (ep.final_event == env::Event::Success) ++successes;
    reward_sum += ep.total_reward;
    out.episodes.push_back(ep);
  }
  out.mean_reward = reward_sum / n_episodes;
  out.success_rate = static_cast<double>(successes) / n_episodes;
  return out;
}

EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint,
                               const env::SceneConfig& scene, env::Task task, int n_episodes,
                               std::uint64_t seed, const std::filesystem::path& trace_path) {
  const agent::PolicyNet actor = load_actor(checkpoint);
  if (trace_path.empty()) return evaluate(greedy_policy(actor), scene, task, n_episodes, seed);
  std::ofstream trace(trace_path);
  if (!trace) throw FormatError(fmt::format("cannot write trace {}", trace_path.string()));
  return evaluate(greedy_policy(actor), scene, task, n_episodes, seed, &trace);
}

}  // namespace dexgrasp::harness
