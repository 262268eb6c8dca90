#pragma once

#include "dexgrasp/env/kinematics.hpp"
#include "dexgrasp/env/reward.hpp"
#include "dexgrasp/env/scene.hpp"

#include <cstdint>

namespace dexgrasp::env {

inline constexpr int kObsDim = 20;
inline constexpr int kActDim = 8;

/// q[6] | nu_hand[3] | n_hand[3] | nu_object[3] | rel[3] | aperture | dist
using Observation = Eigen::Matrix<double, kObsDim, 1>;
/// dq[6] | d_wrist | d_aperture, each in [-1, 1]
using Action = Eigen::Matrix<double, kActDim, 1>;

namespace obs {
inline constexpr int kJoints = 0;
inline constexpr int kHand = 6;
inline constexpr int kNormal = 9;
inline constexpr int kObject = 12;
inline constexpr int kRel = 15;
inline constexpr int kAperture = 18;
inline constexpr int kDist = 19;
}  // namespace obs

struct EnvState {
  Task task = Task::Ball;
  std::uint64_t seed = 0;
  JointVector q = JointVector::Zero();
  double wrist_pitch = 0.0;
  double aperture = 1.0;
  Vec3 nu_hand = Vec3::Zero();
  Vec3 n_hand = Vec3::UnitZ();
  Vec3 nu_object = Vec3::Zero();
  double object_radius = 0.0;
  double prev_dist_sq = 0.0;
  int step_index = 0;
  Event terminal_event = Event::None;
  /// Observation-space target used by the distance term.
  Observation target = Observation::Zero();
  bool target_from_ik = true;
};

Observation make_observation(const EnvState& s);

/// The observation the agent would see with the hand centred above the object
/// at the grasp height, normal pointing at the object and the aperture at the
/// grasp value; joint entries come from a DLS IK solve seeded at `s.q`. Falls
/// back to the current joints (and logs) when IK does not converge.
Observation target_state(const SceneConfig& cfg, const EnvState& s, bool* ik_converged = nullptr);

/// Hand position the target pose places the hand at.
Vec3 grasp_point(const SceneConfig& cfg, const EnvState& s);

bool object_reachable(const ArmModel& arm, const Vec3& object);

bool success_predicate(const SceneConfig& cfg, const EnvState& s, double dist, double cos_psi);
/// Any sampled link point or the hand below z = 0, or the hand outside the workspace box.
bool collision_predicate(const SceneConfig& cfg, const EnvState& s);

struct StepResult {
  Observation obs;
  RewardBreakdown reward;
  bool done = false;
};

/// Deterministic kinematic arm-hand grasping simulator.
class GraspEnv {
 public:
  explicit GraspEnv(SceneConfig cfg = {});

  Observation reset(std::uint64_t seed, Task task);
  /// Throws ContractViolation once the episode is over and NumericError for a
  /// non-finite action.
  StepResult step(const Action& action);

  bool done() const;
  Observation observe() const { return make_observation(state_); }
  const EnvState& state() const { return state_; }
  const SceneConfig& config() const { return cfg_; }

 private:
  SceneConfig cfg_;
  EnvState state_;
  bool episode_over_ = true;
};

}  // namespace dexgrasp::env
