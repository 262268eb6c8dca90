#pragma once

#include "dexgrasp/agent/networks.hpp"

#include <cstddef>
#include <random>

namespace dexgrasp::agent {

struct Transition {
  Eigen::Matrix<double, kStateDim, 1> state;
  Eigen::Matrix<double, kActionDim, 1> action;
  double reward = 0.0;
  Eigen::Matrix<double, kStateDim, 1> next_state;
  bool done = false;
};

struct Batch {
  Matrix states;       // B x 20
  Matrix actions;      // B x 8
  Matrix rewards;      // B x 1
  Matrix next_states;  // B x 20
  Matrix dones;        // B x 1, 1.0 when terminal
};

/// Fixed-capacity FIFO ring buffer sampled uniformly with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 300000);

  void push(const Transition& t);
  /// Throws ContractViolation when fewer than `batch_size` transitions are stored.
  Batch sample(int batch_size, std::mt19937_64& rng) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Index the next push writes to.
  std::size_t cursor() const { return cursor_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

}  // namespace dexgrasp::agent
