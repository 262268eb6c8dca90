#include "dexgrasp/env/grasp_env.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace dexgrasp::env {

Observation make_observation(const EnvState& s) {
  Observation o;
  const Vec3 rel = s.nu_object - s.nu_hand;
  o.segment<kNumJoints>(obs::kJoints) = s.q;
  o.segment<3>(obs::kHand) = s.nu_hand;
  o.segment<3>(obs::kNormal) = s.n_hand;
  o.segment<3>(obs::kObject) = s.nu_object;
  o.segment<3>(obs::kRel) = rel;
  o(obs::kAperture) = s.aperture;
  o(obs::kDist) = rel.norm();
  return o;
}

Vec3 grasp_point(const SceneConfig& cfg, const EnvState& s) {
  return s.nu_object + Vec3(0.0, 0.0, s.object_radius + cfg.grip_offset);
}

Observation target_state(const SceneConfig& cfg, const EnvState& s, bool* ik_converged) {
  const Vec3 hand = grasp_point(cfg, s);
  const IkResult ik = solve_ik(cfg.arm, hand, s.q, std::numbers::pi);
  if (ik_converged != nullptr) *ik_converged = ik.converged;
  if (!ik.converged) {
    spdlog::warn("target IK did not converge (residual {:.3g} m); using current joints",
                 ik.residual);
  }
  Observation o;
  const Vec3 rel = s.nu_object - hand;
  o.segment<kNumJoints>(obs::kJoints) = ik.converged ? ik.q : s.q;
  o.segment<3>(obs::kHand) = hand;
  o.segment<3>(obs::kNormal) = Vec3(0.0, 0.0, -1.0);
  o.segment<3>(obs::kObject) = s.nu_object;
  o.segment<3>(obs::kRel) = rel;
  o(obs::kAperture) = cfg.task(s.task).grasp_aperture;
  o(obs::kDist) = rel.norm();
  return o;
}

bool object_reachable(const ArmModel& arm, const Vec3& object) {
  return (object - arm.base_position).norm() <= arm.reach();
}

bool success_predicate(const SceneConfig& cfg, const EnvState& s, double dist, double c) {
  const TaskParams& t = cfg.task(s.task);
  return dist <= s.object_radius + cfg.success_margin && c >= cfg.reward.lambda_th &&
         s.aperture >= t.aperture_lo && s.aperture <= t.aperture_hi;
}

bool collision_predicate(const SceneConfig& cfg, const EnvState& s) {
  const ArmPose pose = forward_kinematics(cfg.arm, s.q, s.wrist_pitch);
  for (int i = 0; i < kNumJoints; ++i) {
    for (int k = 1; k <= cfg.link_samples; ++k) {
      const double t = static_cast<double>(k) / cfg.link_samples;
      const Vec3 p = pose.points[i] + t * (pose.points[i + 1] - pose.points[i]);
      if (p.z() < 0.0) return true;
    }
  }
  return pose.hand.z() < 0.0 || !cfg.workspace.contains(pose.hand);
}

GraspEnv::GraspEnv(SceneConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Observation GraspEnv::reset(std::uint64_t seed, Task task) {
  auto rng = make_rng(seed, "env.reset");
  std::uniform_real_distribution<double> jitter(-cfg_.home_jitter, cfg_.home_jitter);
  EnvState s;
  s.task = task;
  s.seed = seed;
  JointVector q = cfg_.home_q;
  for (int i = 0; i < kNumJoints; ++i) q(i) += jitter(rng);
  s.q = cfg_.arm.clamp(q);
  s.wrist_pitch = cfg_.arm.clamp_wrist(cfg_.home_wrist);
  s.aperture = std::clamp(cfg_.home_aperture, 0.0, 1.0);

  const TaskParams& params = cfg_.task(task);
  s.object_radius = params.object_radius;
  std::uniform_real_distribution<double> ux(cfg_.object_box.lo.x(), cfg_.object_box.hi.x());
  std::uniform_real_distribution<double> uy(cfg_.object_box.lo.y(), cfg_.object_box.hi.y());
  do {
    s.nu_object = Vec3(ux(rng), uy(rng), params.object_center_height);
  } while (!object_reachable(cfg_.arm, s.nu_object));

  const ArmPose pose = forward_kinematics(cfg_.arm, s.q, s.wrist_pitch);
  s.nu_hand = pose.hand;
  s.n_hand = pose.normal;
  s.target = target_state(cfg_, s, &s.target_from_ik);
  s.prev_dist_sq = (make_observation(s) - s.target).squaredNorm();
  s.step_index = 0;
  s.terminal_event = Event::None;
  state_ = s;
  episode_over_ = false;
  return make_observation(state_);
}

bool GraspEnv::done() const { return episode_over_; }

StepResult GraspEnv::step(const Action& action) {
  if (episode_over_) {
    throw ContractViolation(
        fmt::format("step called on a finished episode (step {}, event {})", state_.step_index,
                    to_string(state_.terminal_event)));
  }
  if (!action.allFinite()) throw NumericError("action contains NaN or infinite components");

  const Action a = action.cwiseMax(-1.0).cwiseMin(1.0);
  EnvState& s = state_;
  s.q = cfg_.arm.clamp(s.q + cfg_.joint_step * a.head<kNumJoints>());
  s.wrist_pitch = cfg_.arm.clamp_wrist(s.wrist_pitch + cfg_.wrist_step * a(6));
  s.aperture = std::clamp(s.aperture + cfg_.aperture_step * a(7), 0.0, 1.0);
  const ArmPose pose = forward_kinematics(cfg_.arm, s.q, s.wrist_pitch);
  s.nu_hand = pose.hand;
  s.n_hand = pose.normal;
  s.step_index += 1;

  StepResult out;
  out.obs = make_observation(s);
  const double dist = out.obs(obs::kDist);
  const double c = cos_psi(s.n_hand, s.nu_object, s.nu_hand);
  Event e = Event::None;
  if (success_predicate(cfg_, s, dist, c)) {
    e = Event::Success;
  } else if (collision_predicate(cfg_, s)) {
    e = Event::Collision;
  } else if (dist <= s.object_radius + cfg_.contact_margin) {
    e = Event::Contact;
  }
  const double dist_sq = (out.obs - s.target).squaredNorm();
  out.reward = compose_reward(s.prev_dist_sq, dist_sq, e, c, cfg_.reward);
  s.prev_dist_sq = dist_sq;

  const bool terminal = e == Event::Success || e == Event::Collision ||
                        (e == Event::Contact && cfg_.terminate_on_contact);
  if (terminal) s.terminal_event = e;
  out.done = terminal || s.step_index >= cfg_.max_steps;
  episode_over_ = out.done;
  return out;
}

}  // namespace dexgrasp::env
