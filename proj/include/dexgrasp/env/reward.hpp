#pragma once

#include "dexgrasp/env/kinematics.hpp"
#include "dexgrasp/env/scene.hpp"

namespace dexgrasp::env {

/// Per-step reward decomposition. `total` is the left-to-right sum
/// distance + smooth + event + pose.
struct RewardBreakdown {
  double distance_term = 0.0;  // -||s_t - s_target||^2
  double smooth_term = 0.0;    // xi1 * (previous dist_sq - dist_sq)
  double event_term = 0.0;     // xi2 * event_reward
  double pose_term = 0.0;      // xi3 * pose_reward(cos_psi)
  double total = 0.0;
  double cos_psi = 0.0;
  double dist_sq = 0.0;
  Event event = Event::None;
};

/// Cosine between the hand normal and the hand-to-object displacement.
/// Returns 1.0 when the hand centre sits on the object centre (< 1e-9 apart).
double cos_psi(const Vec3& n_hand, const Vec3& nu_object, const Vec3& nu_hand);

/// Z4 (c - th) below or at the threshold, Z5 (c - th) above it.
double pose_reward(double cos_psi, const RewardWeights& w = {});

/// +Z1 | -Z2 | -Z3 | 0 for success | collision | contact | none.
double event_reward(Event e, const RewardWeights& w = {});

RewardBreakdown compose_reward(double prev_dist_sq, double dist_sq, Event e, double cos_psi,
                               const RewardWeights& w);

}  // namespace dexgrasp::env
