#pragma once

#include <Eigen/Core>

#include <array>
#include <numbers>

namespace dexgrasp::env {

using Vec3 = Eigen::Vector3d;
inline constexpr int kNumJoints = 6;
using JointVector = Eigen::Matrix<double, kNumJoints, 1>;

struct JointLimit {
  double lo;
  double hi;
};

/// Serial chain: a yaw joint at the base carrying a vertical column (link 0),
/// followed by five pitch joints (links 1..5) in the yawed vertical plane.
/// The end of link 5 is the hand centre. A separate wrist pitch rotates the
/// hand normal away from the final link direction.
struct ArmModel {
  std::array<double, kNumJoints> link_lengths{0.30, 0.25, 0.20, 0.15, 0.10, 0.08};
  std::array<JointLimit, kNumJoints> joint_limits{
      JointLimit{-std::numbers::pi, std::numbers::pi},
      JointLimit{-0.75 * std::numbers::pi, 0.75 * std::numbers::pi},
      JointLimit{-0.75 * std::numbers::pi, 0.75 * std::numbers::pi},
      JointLimit{-std::numbers::pi, std::numbers::pi},
      JointLimit{-std::numbers::pi, std::numbers::pi},
      JointLimit{-std::numbers::pi, std::numbers::pi}};
  JointLimit wrist_limit{-0.5 * std::numbers::pi, 0.5 * std::numbers::pi};
  Vec3 base_position = Vec3::Zero();

  double reach() const;
  /// Throws ConfigError on non-positive links or ill-ordered limits.
  void validate() const;
  JointVector clamp(const JointVector& q) const;
  double clamp_wrist(double w) const;
};

struct ArmPose {
  /// base, top of column, then the end of each pitch link; points[6] == hand.
  std::array<Vec3, kNumJoints + 1> points;
  Vec3 hand;
  Vec3 normal;
  /// Sum of the pitch joints: direction of the final link measured from +z
  /// towards the outward radial direction.
  double final_link_angle;
};

ArmPose forward_kinematics(const ArmModel& arm, const JointVector& q, double wrist_pitch);

/// d(hand)/dq, analytic.
Eigen::Matrix<double, 3, kNumJoints> position_jacobian(const ArmModel& arm, const JointVector& q);

/// Angle (from +z towards the radial direction of `yaw`) of a direction lying
/// in the arm plane.
double plane_angle(const Vec3& direction, double yaw);

/// One damped-least-squares step towards a hand displacement `dx` with a
/// secondary task pulling the final link angle by `dangle`, weighted by
/// `posture_weight`.
JointVector dls_step(const ArmModel& arm, const JointVector& q, const Vec3& dx, double dangle,
                     double damping, double posture_weight);

struct IkOptions {
  int max_iterations = 200;
  double damping = 0.05;
  double tolerance = 1e-4;
  double posture_weight = 0.3;
  double max_step = 0.2;
};

struct IkResult {
  JointVector q;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Places the hand at `target` with the final link at `final_link_angle`
/// (secondary), starting from `seed`. Joint limits are enforced each iteration.
IkResult solve_ik(const ArmModel& arm, const Vec3& target, const JointVector& seed,
                  double final_link_angle, const IkOptions& options = {});

}  // namespace dexgrasp::env
