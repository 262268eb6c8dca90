#include "dexgrasp/demo/expert.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace dexgrasp::demo {

using env::JointVector;
using env::Vec3;
namespace obs = env::obs;

Action expert_action(const env::SceneConfig& scene, Task task, const Observation& o,
                     const ExpertConfig& cfg) {
  if (!o.allFinite()) throw NumericError("expert received a non-finite observation");
  const env::TaskParams& tp = scene.task(task);
  const JointVector q = o.segment<env::kNumJoints>(obs::kJoints);
  const Vec3 hand = o.segment<3>(obs::kHand);
  const Vec3 normal = o.segment<3>(obs::kNormal);
  const Vec3 object = o.segment<3>(obs::kObject);
  const double aperture = o(obs::kAperture);
  const double r = tp.object_radius;

  // Approach ray: from the object centre, outward (away from the base) and up.
  Vec3 outward(object.x() - scene.arm.base_position.x(), object.y() - scene.arm.base_position.y(),
               0.0);
  outward = outward.norm() > 1e-9 ? Vec3(outward.normalized()) : Vec3::UnitX();
  const Vec3 ray = std::cos(cfg.approach_elevation) * outward +
                   std::sin(cfg.approach_elevation) * Vec3::UnitZ();
  const double land = r - cfg.land_depth;

  const Vec3 from_object = hand - object;
  const double along = from_object.dot(ray);
  const double off_ray = (from_object - along * ray).norm();
  const double c = env::cos_psi(normal, object, hand);
  const bool ready = aperture >= tp.aperture_lo && aperture <= tp.aperture_hi && c >= cfg.min_cos;

  const double descent_length = cfg.descent_strides * cfg.stride;
  const Vec3 pregrasp = object + ray * (land + descent_length);
  const bool on_ray = off_ray <= cfg.align_radius && along > 0.0 &&
                      from_object.norm() - land <= descent_length + cfg.stride_slack * cfg.stride;
  Vec3 move = Vec3::Zero();
  if (!on_ray) {
    const Vec3 err = pregrasp - hand;
    const double n = err.norm();
    move = n > cfg.stride ? Vec3(err * (cfg.stride / n)) : err;
  } else if (ready) {
    const double d = from_object.norm();
    const double remaining = d - land;
    if (remaining > 1e-9) {
      const double strides = std::max(1.0, std::ceil(remaining / cfg.stride - cfg.stride_slack));
      move = -from_object / d * (remaining / strides);
    }
  }

  JointVector dq = JointVector::Zero();
  if (move.squaredNorm() > 0.0) {
    env::IkOptions ik;
    ik.max_iterations = cfg.ik_iterations;
    ik.tolerance = 1e-6;
    ik.posture_weight = cfg.posture_weight;
    const env::IkResult sol = env::solve_ik(scene.arm, hand + move, q, std::numbers::pi, ik);
    dq = sol.q - q;
  }
  const double joint_cap = cfg.max_action * scene.joint_step;
  const double largest = dq.cwiseAbs().maxCoeff();
  if (largest > joint_cap) dq *= joint_cap / largest;

  // Keep the hand normal on the object after the joints move.
  const env::ArmPose next = env::forward_kinematics(scene.arm, q + dq, 0.0);
  const double yaw = q(0) + dq(0);
  const double desired = env::plane_angle(object - next.hand, yaw);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double current_wrist =
      std::remainder(env::plane_angle(normal, q(0)) - q.tail<5>().sum(), kTwoPi);
  const double target_wrist =
      scene.arm.clamp_wrist(std::remainder(desired - next.final_link_angle, kTwoPi));
  const double dwrist = target_wrist - current_wrist;

  Action a;
  a.head<env::kNumJoints>() = dq / scene.joint_step;
  a(6) = dwrist / scene.wrist_step;
  a(7) = (tp.grasp_aperture - aperture) / scene.aperture_step;
  return a.cwiseMax(-cfg.max_action).cwiseMin(cfg.max_action);
}

Trajectory scripted_expert(std::uint64_t env_seed, Task task, double noise_scale,
                           const env::SceneConfig& scene, const ExpertConfig& cfg) {
  if (!(noise_scale >= 0.0 && noise_scale <= 0.2)) {
    throw ContractViolation(fmt::format("noise_scale {} outside [0, 0.2]", noise_scale));
  }
  env::GraspEnv environment(scene);
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const std::uint64_t seed =
        attempt == 0 ? env_seed : derive_seed(env_seed, "expert.retry", attempt);
    auto rng = make_rng(seed, "expert.noise");
    std::uniform_real_distribution<double> noise(-noise_scale, noise_scale);

    Trajectory t;
    t.task = task;
    t.seed = seed;
    t.source = Source::Scripted;
    t.created_at = utc_timestamp();
    Observation o = environment.reset(seed, task);
    while (!environment.done()) {
      Action a = expert_action(scene, task, o, cfg);
      if (noise_scale > 0.0) {
        for (int i = 0; i < env::kActDim; ++i) a(i) += noise(rng);
        a = a.cwiseMax(-1.0).cwiseMin(1.0);
      }
      const env::StepResult res = environment.step(a);
      t.steps.push_back({o, a, res.reward.total, res.reward.event, res.done});
      o = res.obs;
    }
    if (t.succeeded()) return t;
    spdlog::debug("expert attempt {} (env seed {}) ended with {} after {} steps", attempt, seed,
                  env::to_string(environment.state().terminal_event), t.steps.size());
  }
  throw Error(fmt::format("scripted expert failed {} times for env seed {}", cfg.max_retries,
                          env_seed));
}

DemoSet collect_demos(int n, Task task, double noise_scale, std::uint64_t seed,
                      const env::SceneConfig& scene, const ExpertConfig& cfg) {
  if (n < 0) throw ContractViolation("demo count must be non-negative");
  std::vector<Trajectory> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(scripted_expert(derive_seed(seed, "demo.episode", i), task, noise_scale, scene,
                                  cfg));
  }
  return DemoSet(std::move(out));
}

}  // namespace dexgrasp::demo
