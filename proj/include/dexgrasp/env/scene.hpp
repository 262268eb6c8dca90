#pragma once

#include "dexgrasp/env/kinematics.hpp"

#include <nlohmann/json.hpp>

#include <string_view>

namespace dexgrasp::env {

enum class Task { Ball, Bottle };
enum class Event { None, Success, Collision, Contact };

std::string_view to_string(Task t);
std::string_view to_string(Event e);
Task task_from_string(std::string_view s);
Event event_from_string(std::string_view s);

/// Reward weights and event constants.
struct RewardWeights {
  double xi1 = 1000.0;  // motion smoothness
  double xi2 = 1.0;     // event
  double xi3 = 1.0;     // pose
  double z1 = 1000.0;   // success
  double z2 = 100.0;    // collision
  double z3 = 60.0;     // contact
  double z4 = 7.0;      // pose slope below threshold
  double z5 = 80.0;     // pose slope above threshold
  double lambda_th = 0.75;
};

struct TaskParams {
  double object_radius;
  double object_center_height;
  double aperture_lo;  // success band
  double aperture_hi;
  double grasp_aperture;
};

struct Box3 {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p) const;
};

struct SceneConfig {
  ArmModel arm;
  RewardWeights reward;
  TaskParams ball{0.035, 0.035, 0.25, 0.55, 0.40};
  TaskParams bottle{0.030, 0.090, 0.35, 0.65, 0.50};

  double success_margin = 0.01;  // dist <= r + margin
  double contact_margin = 0.03;
  /// Hand-centre height above the object's top in the grasp target.
  double grip_offset = -0.01;
  bool terminate_on_contact = true;

  double joint_step = 0.05;  // rad per unit action
  double wrist_step = 0.05;
  double aperture_step = 0.1;
  int max_steps = 100;

  JointVector home_q = (JointVector() << 0.0, 0.6, 0.9, 0.6, 0.5, 0.4).finished();
  double home_wrist = 0.0;
  double home_aperture = 1.0;
  double home_jitter = 0.05;

  Box3 object_box{Vec3(0.38, -0.15, 0.0), Vec3(0.55, 0.15, 0.0)};
  Box3 workspace{Vec3(-0.4, -0.9, 0.0), Vec3(1.2, 0.9, 1.5)};
  int link_samples = 5;

  const TaskParams& task(Task t) const { return t == Task::Ball ? ball : bottle; }
  void validate() const;
};

void to_json(nlohmann::json& j, const SceneConfig& c);
void from_json(const nlohmann::json& j, SceneConfig& c);

}  // namespace dexgrasp::env
