#include "dexgrasp/env/kinematics.hpp"

#include "dexgrasp/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace dexgrasp::env {

double ArmModel::reach() const {
  double total = 0.0;
  for (double l : link_lengths) total += l;
  return total;
}

void ArmModel::validate() const {
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(link_lengths[i] > 0.0)) {
      throw ConfigError(fmt::format("link {} length must be positive, got {}", i, link_lengths[i]));
    }
    if (!(joint_limits[i].lo < joint_limits[i].hi)) {
      throw ConfigError(fmt::format("joint {} limits [{}, {}] are not ordered", i,
                                    joint_limits[i].lo, joint_limits[i].hi));
    }
  }
  if (!(wrist_limit.lo < wrist_limit.hi)) throw ConfigError("wrist limits are not ordered");
}

JointVector ArmModel::clamp(const JointVector& q) const {
  JointVector out;
  for (int i = 0; i < kNumJoints; ++i) {
    out(i) = std::clamp(q(i), joint_limits[i].lo, joint_limits[i].hi);
  }
  return out;
}

double ArmModel::clamp_wrist(double w) const {
  return std::clamp(w, wrist_limit.lo, wrist_limit.hi);
}

ArmPose forward_kinematics(const ArmModel& arm, const JointVector& q, double wrist_pitch) {
  const Vec3 radial(std::cos(q(0)), std::sin(q(0)), 0.0);
  const Vec3 up = Vec3::UnitZ();
  ArmPose pose;
  pose.points[0] = arm.base_position;
  pose.points[1] = arm.base_position + arm.link_lengths[0] * up;
  double angle = 0.0;
  for (int i = 1; i < kNumJoints; ++i) {
    angle += q(i);
    pose.points[i + 1] =
        pose.points[i] + arm.link_lengths[i] * (std::sin(angle) * radial + std::cos(angle) * up);
  }
  pose.final_link_angle = angle;
  pose.hand = pose.points[kNumJoints];
  const double normal_angle = angle + wrist_pitch;
  pose.normal = (std::sin(normal_angle) * radial + std::cos(normal_angle) * up).normalized();
  return pose;
}

Eigen::Matrix<double, 3, kNumJoints> position_jacobian(const ArmModel& arm, const JointVector& q) {
  const Vec3 radial(std::cos(q(0)), std::sin(q(0)), 0.0);
  const Vec3 tangent(-std::sin(q(0)), std::cos(q(0)), 0.0);
  const Vec3 up = Vec3::UnitZ();
  std::array<double, kNumJoints> angles{};
  double angle = 0.0;
  double horizontal = 0.0;
  for (int i = 1; i < kNumJoints; ++i) {
    angle += q(i);
    angles[i] = angle;
    horizontal += arm.link_lengths[i] * std::sin(angle);
  }
  Eigen::Matrix<double, 3, kNumJoints> jac;
  jac.col(0) = horizontal * tangent;
  for (int j = 1; j < kNumJoints; ++j) {
    Vec3 col = Vec3::Zero();
    for (int i = j; i < kNumJoints; ++i) {
      col += arm.link_lengths[i] * (std::cos(angles[i]) * radial - std::sin(angles[i]) * up);
    }
    jac.col(j) = col;
  }
  return jac;
}

double plane_angle(const Vec3& direction, double yaw) {
  const Vec3 radial(std::cos(yaw), std::sin(yaw), 0.0);
  return std::atan2(direction.dot(radial), direction.z());
}

JointVector dls_step(const ArmModel& arm, const JointVector& q, const Vec3& dx, double dangle,
                     double damping, double posture_weight) {
  Eigen::Matrix<double, 4, kNumJoints> jac;
  jac.topRows<3>() = position_jacobian(arm, q);
  jac.row(3) << 0.0, 1.0, 1.0, 1.0, 1.0, 1.0;
  jac.row(3) *= posture_weight;
  Eigen::Vector4d err;
  err << dx, posture_weight * dangle;
  const Eigen::Matrix4d gram =
      jac * jac.transpose() + damping * damping * Eigen::Matrix4d::Identity();
  return jac.transpose() * gram.ldlt().solve(err);
}

IkResult solve_ik(const ArmModel& arm, const Vec3& target, const JointVector& seed,
                  double final_link_angle, const IkOptions& options) {
  IkResult result;
  result.q = arm.clamp(seed);
  for (int it = 0; it < options.max_iterations; ++it) {
    const ArmPose pose = forward_kinematics(arm, result.q, 0.0);
    const Vec3 err = target - pose.hand;
    result.residual = err.norm();
    result.iterations = it;
    if (result.residual < options.tolerance) {
      result.converged = true;
      return result;
    }
    const double dangle = std::remainder(final_link_angle - pose.final_link_angle,
                                         2.0 * std::numbers::pi);
    JointVector dq =
        dls_step(arm, result.q, err, dangle, options.damping, options.posture_weight);
    const double step = dq.cwiseAbs().maxCoeff();
    if (step > options.max_step) dq *= options.max_step / step;
    result.q = arm.clamp(result.q + dq);
  }
  const ArmPose pose = forward_kinematics(arm, result.q, 0.0);
  result.residual = (target - pose.hand).norm();
  result.iterations = options.max_iterations;
  result.converged = result.residual < options.tolerance;
  return result;
}

}  // namespace dexgrasp::env
