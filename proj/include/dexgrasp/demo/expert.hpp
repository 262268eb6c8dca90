#pragma once

#include "dexgrasp/demo/trajectory.hpp"
#include "dexgrasp/env/grasp_env.hpp"

#include <cstdint>
#include <numbers>

namespace dexgrasp::demo {

/// Waypoint servo: the hand first travels to a pre-grasp point on a ray from
/// the object (outward and up), then moves down the ray onto the object centre
/// in equal strides sized so the contact band is crossed in a single step.
struct ExpertConfig {
  double stride = 0.04;         // nominal hand travel per step [m]
  double stride_slack = 0.15;   // fraction a descent stride may stretch before adding one
  double land_depth = 0.0;      // landing point below the object surface [m]
  int descent_strides = 4;      // strides between pre-grasp point and landing
  double approach_elevation = std::numbers::pi / 4;
  double align_radius = 0.01;   // distance from the ray below which descent starts
  double min_cos = 0.75;        // hand alignment required before descending
  double posture_weight = 0.0;
  double max_action = 0.9;      // keeps targets off the tanh asymptotes
  int ik_iterations = 20;
  int max_retries = 10;
};

/// Noise-free expert action computed from the observation alone.
Action expert_action(const env::SceneConfig& scene, Task task, const Observation& obs,
                     const ExpertConfig& cfg = {});

/// One expert episode. Retries with re-derived env seeds when an attempt does
/// not end in success; throws Error after `max_retries` failures.
Trajectory scripted_expert(std::uint64_t env_seed, Task task, double noise_scale,
                           const env::SceneConfig& scene = {}, const ExpertConfig& cfg = {});

/// `n` expert trajectories with env seeds derived from `seed`.
DemoSet collect_demos(int n, Task task, double noise_scale, std::uint64_t seed,
                      const env::SceneConfig& scene = {}, const ExpertConfig& cfg = {});

}  // namespace dexgrasp::demo
