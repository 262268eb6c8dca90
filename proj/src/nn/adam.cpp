#include "dexgrasp/nn/adam.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dexgrasp::nn {

AdamState::AdamState(const ParamList& params, AdamConfig cfg) : config(cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
  for (const auto& p : params) {
    first_moment.emplace_back(p.tensor->size(), 0.0);
    second_moment.emplace_back(p.tensor->size(), 0.0);
  }
}

void adam_step(const ParamList& params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError(fmt::format("Adam state tracks {} parameters, got {}",
                                     state.first_moment.size(), params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = *params[i].tensor;
    if (t.size() != state.first_moment[i].size()) {
      throw DimensionError(fmt::format("Adam moment for {} has {} entries, parameter has {}",
                                       params[i].name, state.first_moment[i].size(), t.size()));
    }
    if (!t.has_grad()) continue;
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError(fmt::format("non-finite gradient in {} at Adam step {}",
                                       params[i].name, state.step_count + 1));
      }
    }
  }

  const AdamConfig& c = state.config;
  const std::int64_t step = ++state.step_count;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = *params[i].tensor;
    if (!t.has_grad()) continue;
    auto data = t.data();
    auto grad = std::as_const(t).grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double g = grad[k];
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      data[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace dexgrasp::nn
