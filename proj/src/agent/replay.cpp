#include "dexgrasp/agent/replay.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

namespace dexgrasp::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[cursor_] = t;
  }
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ContractViolation(fmt::format("replay index {} >= size {}", i, size_));
  const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
  return data_[(oldest + i) % capacity_];
}

Batch ReplayBuffer::sample(int batch_size, std::mt19937_64& rng) const {
  if (batch_size <= 0 || static_cast<std::size_t>(batch_size) > size_) {
    throw ContractViolation(
        fmt::format("cannot sample {} transitions from a buffer holding {}", batch_size, size_));
  }
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch b{Matrix(batch_size, kStateDim), Matrix(batch_size, kActionDim), Matrix(batch_size, 1),
          Matrix(batch_size, kStateDim), Matrix(batch_size, 1)};
  for (int i = 0; i < batch_size; ++i) {
    const Transition& t = data_[pick(rng)];
    b.states.row(i) = t.state.transpose();
    b.actions.row(i) = t.action.transpose();
    b.rewards(i, 0) = t.reward;
    b.next_states.row(i) = t.next_state.transpose();
    b.dones(i, 0) = t.done ? 1.0 : 0.0;
  }
  return b;
}

}  // namespace dexgrasp::agent
