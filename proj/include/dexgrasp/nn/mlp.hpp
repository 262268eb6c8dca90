#pragma once

#include "dexgrasp/nn/tape.hpp"
#include "dexgrasp/nn/tensor.hpp"

#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dexgrasp::nn {

enum class Activation { Identity, Relu, Tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Whether a tape forward pass tracks the network's parameters.
enum class Grad { Track, Frozen };

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
};

/// Fully connected network. Hidden layers use `hidden`; the last layer uses `output`.
class Mlp {
 public:
  Mlp() = default;
  /// `sizes` = {in, h1, ..., out}. Weights and biases are drawn uniformly from
  /// [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Mlp(std::vector<std::size_t> sizes, Activation hidden, Activation output,
      std::mt19937_64& rng);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Tape-free evaluation.
  Matrix forward(const Matrix& input) const;
  Tensor forward(const Tensor& input) const;

  /// Records the pass on `tape`. With Grad::Track the weights become tape
  /// parameters; with Grad::Frozen they enter as constants.
  Var forward(Tape& tape, Var input, Grad mode);
  Var forward(Tape& tape, Var input) const;

  ParamList parameters(const std::string& prefix);
  std::size_t parameter_count() const;

  bool operator==(const Mlp& other) const;

 private:
  void check_input(Eigen::Index cols) const;
  Var forward_impl(Tape& tape, Var input, Grad mode) const;

  std::vector<std::size_t> sizes_;
  Activation hidden_ = Activation::Relu;
  Activation output_ = Activation::Identity;
  std::vector<DenseLayer> layers_;
};

/// target <- tau * online + (1 - tau) * target, elementwise.
void polyak_update(const ParamList& target, const ParamList& online, double tau);

/// Copies values; shapes must match.
void copy_parameters(const ParamList& dst, const ParamList& src);

}  // namespace dexgrasp::nn
