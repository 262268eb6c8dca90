#include "dexgrasp/agent/bc.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dexgrasp::agent {

void BcConfig::validate() const {
  if (epochs < 0) throw ConfigError("bc epochs must be >= 0");
  if (batch_size <= 0) throw ConfigError("bc batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("bc learning_rate must be positive");
  if (!(target_mse >= 0.0)) throw ConfigError("bc target_mse must be >= 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("bc holdout_fraction must be in [0, 1)");
  }
}

void to_json(nlohmann::json& j, const BcConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"target_mse", c.target_mse},
       {"holdout_fraction", c.holdout_fraction}};
}

void from_json(const nlohmann::json& j, BcConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.target_mse = j.value("target_mse", c.target_mse);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  c.validate();
}

double bc_loss(const PolicyNet& actor, const Matrix& states, const Matrix& actions) {
  const Matrix diff = actor.mean_action(states) - actions;
  return diff.rowwise().squaredNorm().mean();
}

Var bc_loss(Tape& tape, PolicyNet& actor, const Matrix& states, const Matrix& actions) {
  const Var a = actor.mean_action(tape, tape.constant(states), Grad::Track);
  return nn::mean(nn::row_sum(nn::square(nn::sub(a, tape.constant(actions)))));
}

namespace {

Matrix gather(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t begin,
              std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(i - begin) = m.row(idx[i]);
  return out;
}

}  // namespace

BcResult pretrain(PolicyNet& actor, const demo::DemoSet& demos, const BcConfig& cfg,
                  std::uint64_t seed) {
  cfg.validate();
  if (demos.empty()) throw ContractViolation("behavior cloning needs demonstrations");
  if (actor.mean_head.output_dim() != kActionDim) {
    throw DimensionError(fmt::format("actor outputs {} actions, expected {}",
                                     actor.mean_head.output_dim(), kActionDim));
  }
  const auto [all_states, all_actions] = demos.all_pairs();
  const std::size_t n = demos.num_pairs();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto split_rng = make_rng(seed, "bc.split");
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_holdout = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * n));
  if (n_holdout >= n) n_holdout = n - 1;
  const std::vector<std::size_t> holdout(order.begin(), order.begin() + n_holdout);
  std::vector<std::size_t> train(order.begin() + n_holdout, order.end());

  const Matrix holdout_s = gather(all_states, holdout, 0, holdout.size());
  const Matrix holdout_a = gather(all_actions, holdout, 0, holdout.size());
  const Matrix train_s = gather(all_states, train, 0, train.size());
  const Matrix train_a = gather(all_actions, train, 0, train.size());

  BcResult result;
  result.train_pairs = train.size();
  result.holdout_pairs = holdout.size();
  result.initial_train_loss = bc_loss(actor, train_s, train_a);
  if (n_holdout > 0) result.initial_holdout_loss = bc_loss(actor, holdout_s, holdout_a);

  const nn::ParamList params = actor.mean_parameters();
  nn::AdamState opt(params, {cfg.learning_rate});
  auto shuffle_rng = make_rng(seed, "bc.shuffle");
  std::vector<std::size_t> perm(train.size());
  std::iota(perm.begin(), perm.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < perm.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(perm.size(), begin + cfg.batch_size);
      const Matrix s = gather(train_s, perm, begin, end);
      const Matrix a = gather(train_a, perm, begin, end);
      Tape tape;
      const Var loss = bc_loss(tape, actor, s, a);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        throw NumericError(fmt::format("bc loss is {} at epoch {} batch {}", value, epoch, batches));
      }
      nn::zero_grads(params);
      tape.backward(loss);
      nn::adam_step(params, opt);
      sum += value;
      ++batches;
    }
    result.train_loss.push_back(sum / static_cast<double>(batches));
    if (n_holdout > 0) result.holdout_loss.push_back(bc_loss(actor, holdout_s, holdout_a));
    result.epochs_run = epoch + 1;
    if (result.train_loss.back() < cfg.target_mse) {
      result.early_stopped = true;
      break;
    }
  }
  spdlog::debug("bc: {} epochs, train loss {:.3g} -> {:.3g}", result.epochs_run,
                result.initial_train_loss,
                result.train_loss.empty() ? result.initial_train_loss : result.train_loss.back());
  return result;
}

}  // namespace dexgrasp::agent
