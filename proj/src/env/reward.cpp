#include "dexgrasp/env/reward.hpp"

#include <algorithm>

namespace dexgrasp::env {

double cos_psi(const Vec3& n_hand, const Vec3& nu_object, const Vec3& nu_hand) {
  const Vec3 d = nu_object - nu_hand;
  const double dn = d.norm();
  if (dn < 1e-9) return 1.0;
  const double c = n_hand.dot(d) / (n_hand.norm() * dn);
  return std::clamp(c, -1.0, 1.0);
}

double pose_reward(double c, const RewardWeights& w) {
  return c <= w.lambda_th ? w.z4 * (c - w.lambda_th) : w.z5 * (c - w.lambda_th);
}

double event_reward(Event e, const RewardWeights& w) {
  switch (e) {
    case Event::Success:
      return w.z1;
    case Event::Collision:
      return -w.z2;
    case Event::Contact:
      return -w.z3;
    case Event::None:
      return 0.0;
  }
  return 0.0;
}

RewardBreakdown compose_reward(double prev_dist_sq, double dist_sq, Event e, double c,
                               const RewardWeights& w) {
  RewardBreakdown r;
  r.dist_sq = dist_sq;
  r.cos_psi = c;
  r.event = e;
  r.distance_term = -dist_sq;
  r.smooth_term = w.xi1 * (prev_dist_sq - dist_sq);
  r.event_term = w.xi2 * event_reward(e, w);
  r.pose_term = w.xi3 * pose_reward(c, w);
  r.total = r.distance_term + r.smooth_term + r.event_term + r.pose_term;
  return r;
}

}  // namespace dexgrasp::env
