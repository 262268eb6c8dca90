#pragma once

#include "dexgrasp/env/grasp_env.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace dexgrasp::demo {

using env::Action;
using env::Event;
using env::Observation;
using env::Task;

enum class Source { Scripted, Teleop };
std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

struct Step {
  Observation obs;  // observation the action was taken from
  Action act;
  double reward = 0.0;
  Event event = Event::None;
  bool done = false;

  bool operator==(const Step&) const = default;
};

struct Trajectory {
  Task task = Task::Ball;
  std::uint64_t seed = 0;
  Source source = Source::Scripted;
  std::string created_at;  // ISO-8601 UTC
  std::vector<Step> steps;

  /// Throws FormatError if empty, non-finite, or `done` appears before the last step.
  void validate() const;
  bool succeeded() const { return !steps.empty() && steps.back().event == Event::Success; }
  bool operator==(const Trajectory&) const = default;
};

std::string utc_timestamp();

/// Immutable-after-construction set of trajectories with a flat (trajectory,
/// step) index for uniform pair sampling.
class DemoSet {
 public:
  DemoSet() = default;
  explicit DemoSet(std::vector<Trajectory> trajectories);

  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::size_t num_pairs() const { return index_.size(); }
  bool empty() const { return index_.empty(); }
  const Step& pair(std::size_t i) const;

  /// All pairs as (states[N x 20], actions[N x 8]) in storage order.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> all_pairs() const;

  bool operator==(const DemoSet& o) const { return trajectories_ == o.trajectories_; }

 private:
  std::vector<Trajectory> trajectories_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> index_;
};

struct ExpertBatch {
  Eigen::MatrixXd states;   // B x 20
  Eigen::MatrixXd actions;  // B x 8
};

/// B pairs drawn uniformly with replacement. Throws ContractViolation on an empty set.
ExpertBatch sample_expert_batch(const DemoSet& set, int batch_size, std::uint64_t seed);
/// Same, drawing from a caller-owned generator.
ExpertBatch sample_expert_batch(const DemoSet& set, int batch_size, std::mt19937_64& rng);

/// JSON lines: per trajectory one header line followed by one line per step.
void save(const DemoSet& set, const std::filesystem::path& path);
DemoSet load(const std::filesystem::path& path);

void write_trajectory(std::ostream& out, const Trajectory& t);

}  // namespace dexgrasp::demo
