#include "criteria.hpp"

#include "dexgrasp/agent/bc.hpp"
#include "dexgrasp/agent/contrastive.hpp"
#include "dexgrasp/agent/sac.hpp"
#include "dexgrasp/demo/expert.hpp"
#include "dexgrasp/env/grasp_env.hpp"
#include "dexgrasp/harness/train.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <utility>

namespace dexgrasp::criteria {

namespace fs = std::filesystem;
using agent::Matrix;
using agent::Tape;
using agent::Var;

namespace {

Matrix uniform(int r, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Relative error between autodiff and central differences on `probes`
// randomly chosen parameter entries.
double fd_check(const nn::ParamList& params, const std::function<double()>& value,
                const std::function<void()>& backprop, std::mt19937_64& rng, int probes = 24) {
  nn::zero_grads(params);
  backprop();
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  std::uniform_int_distribution<std::size_t> which(0, params.size() - 1);
  for (int i = 0; i < probes; ++i) {
    const std::size_t p = which(rng);
    std::uniform_int_distribution<std::size_t> entry(0, params[p].tensor->size() - 1);
    picks.emplace_back(p, entry(rng));
  }
  std::vector<double> analytic;
  for (auto [p, k] : picks) analytic.push_back(std::as_const(*params[p].tensor).grad()[k]);

  const double h = 1e-6;
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    double& x = params[picks[i].first].tensor->data()[picks[i].second];
    const double x0 = x;
    x = x0 + h;
    const double fp = value();
    x = x0 - h;
    const double fm = value();
    x = x0;
    const double fd = (fp - fm) / (2.0 * h);
    diff += (fd - analytic[i]) * (fd - analytic[i]);
    scale = std::max({scale, fd * fd, analytic[i] * analytic[i]});
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

agent::NetworkShape tanh_shape(std::size_t h) { return {{h, h}, nn::Activation::Tanh}; }

agent::Batch random_batch(int b, std::mt19937_64& rng) {
  agent::Batch batch;
  batch.states = uniform(b, agent::kStateDim, rng);
  batch.actions = uniform(b, agent::kActionDim, rng, -0.95, 0.95);
  batch.rewards = uniform(b, 1, rng, -5, 5);
  batch.next_states = uniform(b, agent::kStateDim, rng);
  batch.dones = Matrix::Zero(b, 1);
  return batch;
}

void randomize_log_scale(agent::PolicyNet& actor, std::mt19937_64& rng) {
  auto& layer = actor.log_scale_head.layers().back();
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (double& w : layer.weight.data()) w = u(rng);
}

}  // namespace

Verdict gradient_correctness(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = make_rng(seed, "criteria.grad");
  const double tol = 1e-4;
  int configs = 0, failed = 0;
  double worst = 0.0;
  std::string worst_name;
  auto record = [&](const std::string& name, double err) {
    ++configs;
    if (!(err < tol)) ++failed;
    if (!(err <= worst)) {
      worst = err;
      worst_name = name;
    }
  };

  // critic loss, 0.5 mean (Q - target)^2
  for (int i = 0; i < 5; ++i) {
    const std::size_t h = 8u << (i % 3);
    const int b = 4 + 3 * i;
    agent::QNet q(rng, tanh_shape(h));
    const agent::Batch batch = random_batch(b, rng);
    const Matrix target = uniform(b, 1, rng, -3, 3);
    const auto params = q.parameters("q");
    const double err = fd_check(
        params, [&] { return agent::critic_loss_and_grad(q, batch, target); },
        [&] { agent::critic_loss_and_grad(q, batch, target); }, rng);
    record(fmt::format("critic h={} B={}", h, b), err);
  }

  // actor loss, with and without the contrastive term
  for (int i = 0; i < 6; ++i) {
    const std::size_t h = 8u << (i % 2);
    const int b = 5 + 2 * i;
    agent::PolicyNet actor(rng, tanh_shape(h));
    randomize_log_scale(actor, rng);
    const agent::QNet q1(rng, tanh_shape(h)), q2(rng, tanh_shape(h));
    const Matrix states = uniform(b, agent::kStateDim, rng);
    const Matrix eps = uniform(b, agent::kActionDim, rng, -2, 2);
    agent::SacConfig cfg;
    cfg.alpha = i % 2 ? 1.0 : 0.2;
    agent::AuxLoss aux;
    agent::ClConfig cl;
    cl.feature_dim = 16;
    std::optional<agent::ProjectionHead> head;
    Matrix es, ea, ceps;
    if (i >= 3) {
      head.emplace(rng, cl, tanh_shape(h));
      es = uniform(b, agent::kStateDim, rng);
      ea = uniform(b, agent::kActionDim, rng, -0.9, 0.9);
      ceps = uniform(b, agent::kActionDim, rng, -2, 2);
      cl.mode = i == 5 ? agent::ClMode::Standard : agent::ClMode::Paper;
      aux = [&](Tape& tape) {
        return agent::actor_contrastive_term(tape, actor, *head, es, ea, ceps, cl);
      };
    }
    const auto params = actor.parameters();
    auto run = [&] { return agent::actor_loss_and_grad(actor, states, eps, q1, q2, cfg, 0.5, aux).total; };
    record(fmt::format("actor h={} B={}{}", h, b, i >= 3 ? " +cl" : ""),
           fd_check(params, run, [&] { run(); }, rng));
  }

  // behaviour cloning loss
  for (int i = 0; i < 4; ++i) {
    const std::size_t h = 8u << (i % 2);
    const int b = 6 + 5 * i;
    agent::PolicyNet actor(rng, tanh_shape(h));
    const Matrix s = uniform(b, agent::kStateDim, rng);
    const Matrix a = uniform(b, agent::kActionDim, rng, -0.9, 0.9);
    const auto params = actor.mean_parameters();
    auto value = [&] {
      Tape tape;
      return agent::bc_loss(tape, actor, s, a).value()(0, 0);
    };
    auto backprop = [&] {
      Tape tape;
      tape.backward(agent::bc_loss(tape, actor, s, a));
    };
    record(fmt::format("bc h={} B={}", h, b), fd_check(params, value, backprop, rng));
  }

  // contrastive loss through the projection head, both modes
  for (int i = 0; i < 4; ++i) {
    const std::size_t h = 8u << (i % 2);
    const int b = 3 + 4 * i;
    agent::ClConfig cl;
    cl.feature_dim = 12;
    cl.mode = i % 2 ? agent::ClMode::Standard : agent::ClMode::Paper;
    agent::ProjectionHead head(rng, cl, tanh_shape(h));
    const Matrix s = uniform(b, agent::kStateDim, rng);
    const Matrix ae = uniform(b, agent::kActionDim, rng, -0.9, 0.9);
    const Matrix aa = uniform(b, agent::kActionDim, rng, -0.9, 0.9);
    const auto params = head.parameters();
    auto build = [&](Tape& tape) {
      const Var sv = tape.constant(s);
      return agent::contrastive_loss(head.embed(tape, sv, tape.constant(ae), agent::Grad::Track),
                                     head.embed(tape, sv, tape.constant(aa), agent::Grad::Track),
                                     cl.tau_cl, cl.mode);
    };
    auto value = [&] {
      Tape tape;
      return build(tape).value()(0, 0);
    };
    auto backprop = [&] {
      Tape tape;
      tape.backward(build(tape));
    };
    record(fmt::format("contrastive head {} B={}", agent::to_string(cl.mode), b),
           fd_check(params, value, backprop, rng));
  }

  // contrastive loss with respect to the embeddings themselves
  for (auto mode : {agent::ClMode::Paper, agent::ClMode::Standard}) {
    const int b = 7;
    nn::Tensor he({7, 10}), ha({7, 10});
    std::normal_distribution<double> n(0, 1);
    for (double& v : he.data()) v = n(rng);
    for (double& v : ha.data()) v = n(rng);
    nn::ParamList params{{"he", &he}, {"ha", &ha}};
    auto build = [&](Tape& tape) {
      return agent::contrastive_loss(tape.parameter(he), tape.parameter(ha), 0.1, mode);
    };
    auto value = [&] {
      Tape tape;
      return build(tape).value()(0, 0);
    };
    auto backprop = [&] {
      Tape tape;
      tape.backward(build(tape));
    };
    record(fmt::format("contrastive embeddings {} B={}", agent::to_string(mode), b),
           fd_check(params, value, backprop, rng));
  }

  const double secs = elapsed(t0);
  Verdict v;
  v.pass = failed == 0 && configs >= 20 && secs < 60.0;
  v.detail = fmt::format("{} configurations, {} over tolerance, worst rel err {:.2e} ({}), {:.1f}s",
                         configs, failed, worst, worst_name, secs);
  return v;
}

Verdict reward_oracles(std::uint64_t seed) {
  using env::Event;
  const auto t0 = std::chrono::steady_clock::now();
  const env::RewardWeights w;
  int checks = 0, failed = 0;
  std::string first_failure;
  auto expect = [&](bool ok, const std::string& what) {
    ++checks;
    if (!ok && failed++ == 0) first_failure = what;
  };

  const std::pair<Event, double> events[] = {
      {Event::Success, 1000.0}, {Event::Collision, -100.0}, {Event::Contact, -60.0}, {Event::None, 0.0}};
  for (auto [e, r] : events) {
    expect(env::event_reward(e, w) == r, fmt::format("event {}", env::to_string(e)));
    expect(env::compose_reward(0.0, 0.0, e, 0.75, w).event_term == r,
           fmt::format("event term {}", env::to_string(e)));
  }
  const std::pair<double, double> poses[] = {{0.5, -1.75}, {0.75, 0.0}, {1.0, 20.0}, {-1.0, -12.25}};
  for (auto [c, r] : poses) expect(env::pose_reward(c, w) == r, fmt::format("pose {}", c));
  expect(env::pose_reward(0.9, w) == 80.0 * (0.9 - 0.75), "pose upper branch");
  expect(env::pose_reward(0.6, w) == 7.0 * (0.6 - 0.75), "pose lower branch");
  expect(env::compose_reward(4.0, 1.0, Event::None, 0.75, w).smooth_term == 3000.0, "smooth 4->1");
  expect(env::compose_reward(2.0, 2.0, Event::None, 0.75, w).smooth_term == 0.0, "smooth steady");

  // decomposition on random rollouts
  env::GraspEnv env;
  auto rng = make_rng(seed, "criteria.rollouts");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<int, 4> seen{};
  long steps = 0;
  for (int ep = 0; ep < 1000; ++ep) {
    const auto task = ep % 2 ? env::Task::Bottle : env::Task::Ball;
    env::Observation obs = env.reset(derive_seed(seed, "criteria.episode", ep), task);
    double prev = (obs - env.state().target).squaredNorm();
    const double first = prev;
    double smooth_sum = 0.0;
    // bias some episodes downwards so collisions show up
    const double bias = (ep % 4 == 3) ? 0.6 : 0.0;
    for (bool done = false; !done;) {
      env::Action a;
      for (int j = 0; j < env::kActDim; ++j) a(j) = u(rng);
      if (bias > 0) a.segment(1, 3).array() += bias;
      const env::StepResult r = env.step(a.cwiseMax(-1.0).cwiseMin(1.0));
      const env::RewardBreakdown& b = r.reward;
      ++steps;
      ++seen[static_cast<int>(b.event)];
      expect(b.total == b.distance_term + b.smooth_term + b.event_term + b.pose_term,
             fmt::format("decomposition ep {}", ep));
      expect(b.event_term == env::event_reward(b.event, w), "event term matches event");
      expect(b.pose_term == env::pose_reward(b.cos_psi, w), "pose term matches cos");
      expect(b.distance_term == -b.dist_sq && b.distance_term <= 0.0, "distance term");
      expect(b.smooth_term == w.xi1 * (prev - b.dist_sq), "smooth term");
      expect(std::abs(b.dist_sq - (r.obs - env.state().target).squaredNorm()) <=
                 1e-12 * std::max(1.0, b.dist_sq),
             "dist_sq recompute");
      smooth_sum += b.smooth_term / w.xi1;
      prev = b.dist_sq;
      obs = r.obs;
      done = r.done;
    }
    expect(std::abs(smooth_sum - (first - prev)) <= 1e-9 * std::max(1.0, first), "telescoping");
  }
  const double secs = elapsed(t0);
  Verdict v;
  v.pass = failed == 0 && secs < 60.0;
  v.detail = fmt::format(
      "{} checks over {} rollout steps (events: {} success, {} collision, {} contact), {} failed{}, "
      "{:.1f}s",
      checks, steps, seen[1], seen[2], seen[3], failed,
      failed ? " first: " + first_failure : std::string(), secs);
  return v;
}

namespace {

// Positive-pair mode: softmax over the B positive-pair similarities, evaluated
// with plain loops and no log-sum-exp shift.
double brute_force_paper(const Matrix& e, const Matrix& a, double tau) {
  const Eigen::Index b = e.rows();
  std::vector<double> sim(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    double dot = 0, ne = 0, na = 0;
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
      dot += e(j, k) * a(j, k);
      ne += e(j, k) * e(j, k);
      na += a(j, k) * a(j, k);
    }
    sim[j] = dot / (std::sqrt(ne) * std::sqrt(na));
  }
  double denom = 0;
  for (double s : sim) denom += std::exp(s / tau);
  double loss = 0;
  for (double s : sim) loss -= std::log(std::exp(s / tau) / denom);
  return loss / static_cast<double>(b);
}

}  // namespace

Verdict contrastive_oracles(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = make_rng(seed, "criteria.contrastive");
  std::normal_distribution<double> n(0.0, 1.0);
  auto gauss = [&](int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
  };
  const auto paper = agent::ClMode::Paper;
  double worst_brute = 0, worst_scale = 0, worst_ties = 0, b1 = 0;
  const int sizes[] = {1, 2, 8, 64};
  for (int i = 0; i < 100; ++i) {
    const int b = sizes[i % 4];
    const Matrix e = gauss(b, 128), a = gauss(b, 128);
    const double loss = agent::contrastive_loss(e, a, 0.1, paper);
    worst_brute = std::max(worst_brute, std::abs(loss - brute_force_paper(e, a, 0.1)));
    if (b == 1) b1 = std::max(b1, std::abs(loss));
    Matrix es = e, as = a;
    for (int j = 0; j < b; ++j) {
      es.row(j) *= std::exp(3.0 * n(rng));
      as.row(j) *= std::exp(3.0 * n(rng));
    }
    worst_scale = std::max(worst_scale, std::abs(agent::contrastive_loss(es, as, 0.1, paper) - loss));
    // ties: every positive pair identical up to scale -> similarity 1 everywhere
    Matrix t = gauss(b, 128);
    Matrix t2 = t;
    for (int j = 0; j < b; ++j) t2.row(j) *= 0.5 + j;
    for (auto mode : {paper, agent::ClMode::Standard}) {
      const Matrix& x = mode == paper ? t : Matrix(Matrix::Ones(b, 128));
      const Matrix& y = mode == paper ? t2 : Matrix(Matrix::Ones(b, 128) * 2.0);
      worst_ties = std::max(worst_ties,
                            std::abs(agent::contrastive_loss(x, y, 0.1, mode) - std::log(b)));
    }
  }
  // two pairs with similarities 1 and 0.5
  Matrix e2(2, 2), a2(2, 2);
  e2 << 1, 0, 1, 0;
  a2 << 1, 0, 0.5, std::sqrt(0.75);
  const double lse = std::log(std::exp(10.0) + std::exp(5.0));
  const double expect2 = -0.5 * ((10.0 - lse) + (5.0 - lse));
  const double got2 = agent::contrastive_loss(e2, a2, 0.1, paper);

  const double secs = elapsed(t0);
  Verdict v;
  v.pass = worst_brute <= 1e-10 && b1 <= 1e-10 && worst_ties <= 1e-10 && worst_scale <= 1e-10 &&
           std::abs(got2 - expect2) <= 1e-10 && std::abs(got2 - 2.50672) < 1e-5 && secs < 60.0;
  v.detail = fmt::format(
      "brute force max diff {:.1e}, B=1 max |loss| {:.1e}, ties vs ln B {:.1e}, scaling {:.1e}, "
      "two-pair example {:.6f}, {:.1f}s",
      worst_brute, b1, worst_ties, worst_scale, got2, secs);
  return v;
}

namespace {

// Policy whose mean and log-scale heads ignore the state: mean = b, log_scale = ls.
agent::PolicyNet constant_policy(const Eigen::RowVectorXd& b, const Eigen::RowVectorXd& ls) {
  std::mt19937_64 rng(0);
  agent::PolicyNet p(rng, agent::NetworkShape{{4}, nn::Activation::Tanh});
  auto set = [](nn::Mlp& head, const Eigen::RowVectorXd& bias) {
    auto& layer = head.layers().back();
    for (double& w : layer.weight.data()) w = 0.0;
    for (int j = 0; j < bias.size(); ++j) layer.bias[j] = bias(j);
  };
  set(p.mean_head, b);
  set(p.log_scale_head, ls);
  return p;
}

double slice_integral(const Eigen::RowVectorXd& b, const Eigen::RowVectorXd& ls, int dim, int n) {
  const agent::PolicyNet p = constant_policy(b, ls);
  // Other components sit at eps = 0; their density is added back analytically.
  double rest = 0.0;
  for (int j = 0; j < agent::kActionDim; ++j) {
    if (j == dim) continue;
    const double t = std::tanh(b(j));
    rest += -ls(j) - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(1.0 - t * t);
  }
  Matrix eps = Matrix::Zero(n, agent::kActionDim);
  const double h = 2.0 / n;
  for (int k = 0; k < n; ++k) {
    const double a = -1.0 + (k + 0.5) * h;
    eps(k, dim) = (std::atanh(a) - b(dim)) / std::exp(ls(dim));
  }
  Matrix action, logp;
  p.sample(Matrix::Zero(n, agent::kStateDim), eps, action, logp);
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += std::exp(logp(k, 0) - rest) * h;
  return total;
}

}  // namespace

Verdict sac_mechanics(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = make_rng(seed, "criteria.sac");
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  const agent::NetworkShape shape{{32, 32}, nn::Activation::Relu};
  agent::SacConfig cfg;

  // twin-min pessimism
  {
    agent::PolicyNet actor(rng, shape);
    agent::QNet t1(rng, shape), t2(rng, shape);
    const agent::Batch batch = random_batch(64, rng);
    const Matrix eps = agent::gaussian(64, agent::kActionDim, rng);
    const Matrix both = agent::target_q(batch, t1, t2, actor, cfg, eps);
    const Matrix only1 = agent::target_q(batch, t1, t1, actor, cfg, eps);
    const Matrix only2 = agent::target_q(batch, t2, t2, actor, cfg, eps);
    expect((both.array() <= only1.array()).all() && (both.array() <= only2.array()).all(),
           "twin-min pessimism");
    expect(((both.array() == only1.array()) || (both.array() == only2.array())).all(),
           "twin-min picks one critic");

    // terminal masking and the myopic limit
    agent::Batch term = batch;
    term.dones.setOnes();
    term.rewards.setConstant(1000.0);
    expect((agent::target_q(term, t1, t2, actor, cfg, eps).array() == 1000.0).all(),
           "done => target = r");
    agent::SacConfig myopic = cfg;
    myopic.gamma = 1e-300;  // gamma must stay inside (0,1); scaled term underflows below r's ulp
    expect(agent::target_q(batch, t1, t2, actor, myopic, eps) == batch.rewards, "gamma -> 0");
  }

  // Polyak geometric convergence with the online critic frozen
  {
    agent::QNet online(rng, shape), target(rng, shape);
    auto dist = [&] {
      double s = 0;
      auto a = online.parameters("o"), b = target.parameters("t");
      for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < a[i].tensor->size(); ++k) {
          const double d = (*a[i].tensor)[k] - (*b[i].tensor)[k];
          s += d * d;
        }
      }
      return std::sqrt(s);
    };
    const double d0 = dist();
    const int n = 1000;
    for (int i = 0; i < n; ++i) nn::polyak_update(target.parameters("t"), online.parameters("o"), cfg.tau);
    const double ratio = dist() / d0;
    expect(std::abs(ratio - std::pow(1.0 - cfg.tau, n)) <= 1e-10,
           fmt::format("polyak ratio {:.15g} vs {:.15g}", ratio, std::pow(1.0 - cfg.tau, n)));
  }

  // gradient isolation
  {
    agent::PolicyNet actor(rng, shape);
    agent::QNet q1(rng, shape), q2(rng, shape);
    agent::QNet t1 = q1, t2 = q2;
    nn::AdamState aopt(actor.parameters(), {cfg.actor_lr});
    nn::AdamState o1(q1.parameters("q1"), {cfg.critic_lr}), o2(q2.parameters("q2"), {cfg.critic_lr});
    const agent::Batch batch = random_batch(32, rng);
    const Matrix eps = agent::gaussian(32, agent::kActionDim, rng);

    const agent::QNet q1_before = q1, q2_before = q2;
    agent::actor_update(actor, aopt, batch.states, eps, q1, q2, cfg, 0.0);
    expect(q1 == q1_before && q2 == q2_before, "actor update leaves critics bit-identical");

    const agent::PolicyNet actor_before = actor;
    const agent::QNet t1_before = t1, t2_before = t2;
    const Matrix target = agent::target_q(batch, t1, t2, actor, cfg, eps);
    agent::critic_update(q1, o1, q2, o2, batch, target);
    expect(actor == actor_before, "critic update leaves the actor bit-identical");
    expect(t1 == t1_before && t2 == t2_before, "critic update leaves targets bit-identical");
    expect(!(q1 == q1_before), "critic update moves the critic");
  }

  // squashed Gaussian density integrates to one along 1-D slices
  double worst = 0.0;
  {
    std::uniform_real_distribution<double> ub(-1.0, 1.0), uls(-1.0, 0.3);
    for (int i = 0; i < 8; ++i) {
      Eigen::RowVectorXd b(agent::kActionDim), ls(agent::kActionDim);
      for (int j = 0; j < agent::kActionDim; ++j) {
        b(j) = ub(rng);
        ls(j) = uls(rng);
      }
      worst = std::max(worst, std::abs(slice_integral(b, ls, i % agent::kActionDim, 200000) - 1.0));
    }
    expect(worst <= 1e-3, fmt::format("density integral off by {:.2e}", worst));
  }

  const double secs = elapsed(t0);
  Verdict v;
  v.pass = failures.empty() && secs < 120.0;
  v.detail = fmt::format("twin-min, terminal mask, polyak, isolation, density |1-integral| <= {:.1e}; "
                         "{} failure(s){}; {:.1f}s",
                         worst, failures.size(), failures.empty() ? "" : ": " + failures.front(),
                         secs);
  return v;
}

Verdict phase1_efficacy(const Phase1Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  harness::RunConfig cfg;
  cfg.seed = opt.seed;
  const demo::DemoSet demos = demo::collect_demos(opt.demos, cfg.task, 0.05,
                                                  derive_seed(opt.seed, "criteria.demos"),
                                                  cfg.scene);
  harness::Learner learner(cfg, cfg.seed);
  const agent::BcResult bc =
      agent::pretrain(learner.actor, demos, cfg.bc, harness::bc_seed(cfg.seed));
  const double holdout = bc.holdout_loss.empty() ? bc.initial_holdout_loss : bc.holdout_loss.back();
  const harness::EvalResult ev =
      harness::evaluate(harness::greedy_policy(learner.actor), cfg.scene, cfg.task,
                        opt.eval_episodes, harness::eval_seed(cfg.seed));
  const double secs = elapsed(t0);
  Verdict v;
  v.pass = holdout < opt.max_holdout && ev.success_rate >= opt.min_success && secs < 300.0;
  v.detail = fmt::format(
      "{} demos / {} pairs, {} epochs: held-out loss {:.4f} (need < {}), train {:.4f}, "
      "greedy success {:.2f} over {} episodes (need >= {}), {:.0f}s",
      opt.demos, demos.num_pairs(), bc.epochs_run, holdout, opt.max_holdout,
      bc.train_loss.empty() ? bc.initial_train_loss : bc.train_loss.back(), ev.success_rate,
      opt.eval_episodes, opt.min_success, secs);
  return v;
}

Verdict ablation_switch_exactness(const fs::path& work_dir, int iterations, int steps) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(work_dir);
  harness::RunConfig base;
  base.seed = 7;
  base.total_iterations = iterations;
  base.steps_per_iteration = steps;
  base.eval_episodes = 5;
  base.checkpoint_every = 1;
  base.sac.warmup_steps = 100;
  base.sac.batch_size = 64;
  base.bc.epochs = 100;
  base.demos_path = work_dir / "demos.jsonl";
  demo::save(demo::collect_demos(5, base.task, 0.05, 3, base.scene), base.demos_path);

  std::vector<agent::PolicyNet> actors_bc, actors_cl;
  harness::RunConfig a = base;
  a.method = harness::Method::BcSac;
  a.output_dir = work_dir / "bc_sac";
  harness::RunConfig b = base;
  b.method = harness::Method::BcSacCl;
  b.cl.xi4 = 0.0;
  b.output_dir = work_dir / "bc_sac_cl_xi0";
  const auto ra = harness::train(a, [&](const auto&, const harness::Learner& l) { actors_bc.push_back(l.actor); });
  const auto rb = harness::train(b, [&](const auto&, const harness::Learner& l) { actors_cl.push_back(l.actor); });

  int compared = 0, differing = 0;
  for (std::size_t i = 0; i < std::min(actors_bc.size(), actors_cl.size()); ++i) {
    ++compared;
    if (!(actors_bc[i] == actors_cl[i])) ++differing;
  }
  // on-disk checkpoints: every tensor the bc_sac run wrote must match bit for bit
  int ckpts = 0, ckpt_diffs = 0;
  for (int it = 1; it <= iterations; ++it) {
    const auto name = fmt::format("iter_{:04d}.ckpt", it);
    const nn::Checkpoint ca = nn::load_checkpoint(a.output_dir / "checkpoints" / name);
    const nn::Checkpoint cb = nn::load_checkpoint(b.output_dir / "checkpoints" / name);
    ++ckpts;
    for (const auto& [tname, t] : ca.tensors) {
      if (!cb.contains(tname) || !(cb.at(tname) == t)) ++ckpt_diffs;
    }
  }
  bool metrics_match = ra.metrics.size() == rb.metrics.size();
  for (std::size_t i = 0; metrics_match && i < ra.metrics.size(); ++i) {
    harness::IterationMetrics x = ra.metrics[i], y = rb.metrics[i];
    y.loss_cl = x.loss_cl = 0.0;
    // the actor loss differs only by xi4 * L_cl = 0
    metrics_match = x == y;
  }
  const double secs = elapsed(t0);
  Verdict v;
  v.pass = compared == iterations + 1 && differing == 0 && ckpts == iterations && ckpt_diffs == 0 &&
           metrics_match;
  v.detail = fmt::format(
      "{} in-memory actor snapshots ({} differ), {} checkpoints ({} differing tensors), "
      "metrics {}, {:.0f}s",
      compared, differing, ckpts, ckpt_diffs, metrics_match ? "identical" : "differ", secs);
  return v;
}

Verdict persistence(const fs::path& work_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(work_dir);
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // demo files
  const demo::DemoSet demos = demo::collect_demos(3, env::Task::Bottle, 0.05, 11);
  demo::save(demos, work_dir / "d1.jsonl");
  const demo::DemoSet back = demo::load(work_dir / "d1.jsonl");
  demo::save(back, work_dir / "d2.jsonl");
  expect(back == demos, "demo set differs after load");
  expect(read_bytes(work_dir / "d1.jsonl") == read_bytes(work_dir / "d2.jsonl"), "demo bytes differ");

  // training checkpoint with every component, replay included
  harness::RunConfig cfg;
  cfg.method = harness::Method::BcSacCl;
  cfg.sac.batch_size = 16;
  harness::Learner l(cfg, 5);
  auto rng = make_rng(5, "criteria.persist");
  env::GraspEnv env;
  env::Observation obs = env.reset(1, env::Task::Ball);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 40; ++i) {
    env::Action a;
    for (int j = 0; j < 8; ++j) a(j) = u(rng);
    const auto r = env.step(a);
    l.replay.push({obs, a, r.reward.total, r.obs, r.done});
    obs = r.done ? env.reset(2 + i, env::Task::Ball) : r.obs;
  }
  for (int i = 0; i < 3; ++i) harness::update(l, cfg, &demos);
  const nn::Checkpoint ck = harness::training_checkpoint(l, cfg, 3, 40, true);
  nn::save_checkpoint(work_dir / "c1.ckpt", ck);
  const nn::Checkpoint ck2 = nn::load_checkpoint(work_dir / "c1.ckpt");
  nn::save_checkpoint(work_dir / "c2.ckpt", ck2);
  expect(read_bytes(work_dir / "c1.ckpt") == read_bytes(work_dir / "c2.ckpt"), "checkpoint bytes differ");
  expect(harness::actor_from_checkpoint(ck2) == l.actor, "actor differs after load");
  expect(ck2.network("q1_target") == l.q1_target.net, "target critic differs after load");
  expect(ck2.adam("actor") == l.actor_opt, "actor optimizer differs after load");
  expect(ck2.meta.at("networks").at("head").value("discardable", false), "head not flagged discardable");

  const nn::Checkpoint dep = harness::deployment_checkpoint(l.actor, cfg, "deploy");
  nn::save_checkpoint(work_dir / "deploy.ckpt", dep);
  const nn::Checkpoint dep2 = nn::load_checkpoint(work_dir / "deploy.ckpt");
  bool head_free = !dep2.has_network("head") && !dep2.has_adam("head");
  for (const auto& name : dep2.names()) head_free = head_free && name.rfind("head", 0) != 0;
  expect(head_free, "deployment checkpoint holds head tensors");
  expect(harness::actor_from_checkpoint(dep2) == l.actor, "deployed actor differs");

  // metrics CSV with awkward doubles
  std::vector<harness::IterationMetrics> rows;
  for (int i = 0; i < 5; ++i) {
    harness::IterationMetrics m;
    m.iter = i;
    m.env_steps = 2000 * i;
    m.updates = 1000 * i;
    m.mean_reward = -1.0 / 3.0 * (i + 1) * 1e3;
    m.success_rate = i / 7.0;
    m.loss_q1 = std::nextafter(0.1, 1.0);
    m.loss_q2 = 1e-300 * (i + 1);
    m.loss_pi = -123456.789012345678;
    m.loss_cl = std::numbers::pi;
    m.entropy = -std::numbers::e * i;
    rows.push_back(m);
  }
  harness::write_metrics_csv(work_dir / "m1.csv", rows);
  const auto rows2 = harness::read_metrics_csv(work_dir / "m1.csv");
  harness::write_metrics_csv(work_dir / "m2.csv", rows2);
  expect(rows2 == rows, "metrics rows differ after reading");
  expect(read_bytes(work_dir / "m1.csv") == read_bytes(work_dir / "m2.csv"), "metrics bytes differ");

  const double secs = elapsed(t0);
  Verdict v;
  v.pass = failures.empty();
  v.detail = fmt::format("demo file, full checkpoint (with replay), deployment checkpoint, metrics CSV: "
                         "{} failure(s){}; {:.1f}s",
                         failures.size(), failures.empty() ? "" : ": " + failures.front(), secs);
  return v;
}

}  // namespace dexgrasp::criteria
