#include "dexgrasp/harness/learner.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>

namespace dexgrasp::harness {

using agent::Matrix;

namespace {

agent::PolicyNet make_actor(std::uint64_t seed) {
  auto rng = make_rng(seed, "init.actor");
  return agent::PolicyNet(rng);
}

agent::QNet make_critic(std::uint64_t seed, int i) {
  auto rng = make_rng(seed, "init.critic", i);
  return agent::QNet(rng);
}

}  // namespace

Learner::Learner(const RunConfig& cfg, std::uint64_t seed)
    : actor(make_actor(seed)),
      q1(make_critic(seed, 1)),
      q2(make_critic(seed, 2)),
      q1_target(q1),
      q2_target(q2),
      actor_opt(actor.parameters(), {cfg.sac.actor_lr}),
      q1_opt(q1.parameters("q1"), {cfg.sac.critic_lr}),
      q2_opt(q2.parameters("q2"), {cfg.sac.critic_lr}),
      replay(cfg.sac.replay_capacity),
      replay_rng(make_rng(seed, "train.replay")),
      noise_rng(make_rng(seed, "train.noise")),
      cl_rng(make_rng(seed, "cl.sample")) {
  if (uses_head(cfg.method)) {
    auto rng = make_rng(seed, "init.head");
    head.emplace(rng, cfg.cl);
    head_opt.emplace(head->parameters(), nn::AdamConfig{cfg.cl.head_lr});
  }
}

UpdateLosses update(Learner& l, const RunConfig& cfg, const demo::DemoSet* demos) {
  const int b = cfg.sac.batch_size;
  const agent::Batch batch = l.replay.sample(b, l.replay_rng);
  UpdateLosses out;

  const Matrix target_eps = agent::gaussian(b, agent::kActionDim, l.noise_rng);
  const Matrix target = agent::target_q(batch, l.q1_target, l.q2_target, l.actor, cfg.sac,
                                        target_eps);
  const agent::CriticLosses c = agent::critic_update(l.q1, l.q1_opt, l.q2, l.q2_opt, batch, target);
  out.q1 = c.q1;
  out.q2 = c.q2;

  agent::AuxLoss aux;
  Matrix expert_s, expert_a, cl_eps;
  if (l.head) {
    if (demos == nullptr || demos->empty()) {
      throw ContractViolation("the contrastive head needs expert demonstrations");
    }
    const demo::ExpertBatch e = demo::sample_expert_batch(*demos, b, l.cl_rng);
    expert_s = e.states;
    expert_a = e.actions;
    const Matrix head_eps = agent::gaussian(b, agent::kActionDim, l.cl_rng);
    out.cl = agent::head_update(*l.head, *l.head_opt, expert_s, expert_a, l.actor, head_eps, cfg.cl);
    cl_eps = agent::gaussian(b, agent::kActionDim, l.cl_rng);
    aux = [&](agent::Tape& tape) {
      return agent::actor_contrastive_term(tape, l.actor, *l.head, expert_s, expert_a, cl_eps,
                                           cfg.cl);
    };
  }

  const Matrix actor_eps = agent::gaussian(b, agent::kActionDim, l.noise_rng);
  const agent::ActorLosses a = agent::actor_update(l.actor, l.actor_opt, batch.states, actor_eps,
                                                   l.q1, l.q2, cfg.sac, cfg.cl.xi4, aux);
  out.pi = a.total;
  out.entropy = a.entropy;

  nn::polyak_update(l.q1_target.parameters("q1_target"), l.q1.parameters("q1"), cfg.sac.tau);
  nn::polyak_update(l.q2_target.parameters("q2_target"), l.q2.parameters("q2"), cfg.sac.tau);
  ++l.updates;
  return out;
}

namespace {

void add_actor(nn::Checkpoint& ckpt, const agent::PolicyNet& actor) {
  ckpt.add_network("actor.trunk", actor.trunk);
  ckpt.add_network("actor.mean", actor.mean_head);
  ckpt.add_network("actor.log_scale", actor.log_scale_head);
}

void add_replay(nn::Checkpoint& ckpt, const agent::ReplayBuffer& replay) {
  const std::size_t n = replay.size();
  nn::Tensor s({n, agent::kStateDim}), a({n, agent::kActionDim}), r({n, 1}),
      s2({n, agent::kStateDim}), d({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const agent::Transition& t = replay.at(i);
    for (int k = 0; k < agent::kStateDim; ++k) {
      s[i * agent::kStateDim + k] = t.state(k);
      s2[i * agent::kStateDim + k] = t.next_state(k);
    }
    for (int k = 0; k < agent::kActionDim; ++k) a[i * agent::kActionDim + k] = t.action(k);
    r[i] = t.reward;
    d[i] = t.done ? 1.0 : 0.0;
  }
  ckpt.add("replay.states", std::move(s));
  ckpt.add("replay.actions", std::move(a));
  ckpt.add("replay.rewards", std::move(r));
  ckpt.add("replay.next_states", std::move(s2));
  ckpt.add("replay.dones", std::move(d));
}

}  // namespace

nn::Checkpoint training_checkpoint(const Learner& l, const RunConfig& cfg, int iteration,
                                   std::int64_t env_steps, bool include_replay) {
  nn::Checkpoint ckpt;
  ckpt.meta["phase"] = "train";
  ckpt.meta["method"] = to_string(cfg.method);
  ckpt.meta["task"] = to_string(cfg.task);
  ckpt.meta["seed"] = cfg.seed;
  ckpt.meta["iteration"] = iteration;
  ckpt.meta["env_steps"] = env_steps;
  ckpt.meta["updates"] = l.updates;
  ckpt.meta["replay"] = {{"size", l.replay.size()},
                         {"capacity", l.replay.capacity()},
                         {"cursor", l.replay.cursor()},
                         {"contents_included", include_replay}};
  add_actor(ckpt, l.actor);
  ckpt.add_network("q1", l.q1.net);
  ckpt.add_network("q2", l.q2.net);
  ckpt.add_network("q1_target", l.q1_target.net);
  ckpt.add_network("q2_target", l.q2_target.net);
  ckpt.add_adam("actor", l.actor_opt);
  ckpt.add_adam("q1", l.q1_opt);
  ckpt.add_adam("q2", l.q2_opt);
  if (l.head) {
    ckpt.add_network("head", l.head->net, /*discardable=*/true);
    ckpt.add_adam("head", *l.head_opt);
  }
  if (include_replay) add_replay(ckpt, l.replay);
  return ckpt;
}

nn::Checkpoint deployment_checkpoint(const agent::PolicyNet& actor, const RunConfig& cfg,
                                     std::string_view phase) {
  nn::Checkpoint ckpt;
  ckpt.meta["phase"] = std::string(phase);
  ckpt.meta["method"] = to_string(cfg.method);
  ckpt.meta["task"] = to_string(cfg.task);
  ckpt.meta["seed"] = cfg.seed;
  add_actor(ckpt, actor);
  return ckpt;
}

agent::PolicyNet actor_from_checkpoint(const nn::Checkpoint& ckpt) {
  agent::PolicyNet actor;
  actor.trunk = ckpt.network("actor.trunk");
  actor.mean_head = ckpt.network("actor.mean");
  actor.log_scale_head = ckpt.network("actor.log_scale");
  if (actor.trunk.input_dim() != agent::kStateDim ||
      actor.mean_head.output_dim() != agent::kActionDim ||
      actor.log_scale_head.output_dim() != agent::kActionDim ||
      actor.mean_head.input_dim() != actor.trunk.output_dim()) {
    throw DimensionError(fmt::format(
        "checkpoint actor maps {} -> {} actions, environment needs {} -> {}",
        actor.trunk.input_dim(), actor.mean_head.output_dim(), agent::kStateDim,
        agent::kActionDim));
  }
  return actor;
}

agent::PolicyNet load_actor(const std::filesystem::path& path) {
  return actor_from_checkpoint(nn::load_checkpoint(path));
}

}  // namespace dexgrasp::harness
