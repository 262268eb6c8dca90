#pragma once

#include "dexgrasp/nn/tensor.hpp"

#include <cstdint>
#include <vector>

namespace dexgrasp::nn {

struct AdamConfig {
  double learning_rate = 7.3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

/// Per-parameter moment buffers for one optimizer.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step_count = 0;

  AdamState() = default;
  AdamState(const ParamList& params, AdamConfig cfg);

  bool operator==(const AdamState& other) const = default;
};

/// Bias-corrected Adam update using each parameter's current `grad()`.
/// Throws NumericError (naming the parameter and step) before touching
/// anything if a gradient is NaN or infinite.
void adam_step(const ParamList& params, AdamState& state);

}  // namespace dexgrasp::nn
