#include "dexgrasp/env/scene.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

namespace dexgrasp::env {

std::string_view to_string(Task t) { return t == Task::Ball ? "ball" : "bottle"; }

std::string_view to_string(Event e) {
  switch (e) {
    case Event::None:
      return "none";
    case Event::Success:
      return "success";
    case Event::Collision:
      return "collision";
    case Event::Contact:
      return "contact";
  }
  return "none";
}

Task task_from_string(std::string_view s) {
  if (s == "ball") return Task::Ball;
  if (s == "bottle") return Task::Bottle;
  throw ConfigError(fmt::format("unknown task '{}' (expected ball|bottle)", s));
}

Event event_from_string(std::string_view s) {
  if (s == "none") return Event::None;
  if (s == "success") return Event::Success;
  if (s == "collision") return Event::Collision;
  if (s == "contact") return Event::Contact;
  throw FormatError(fmt::format("unknown event '{}'", s));
}

bool Box3::contains(const Vec3& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

void SceneConfig::validate() const {
  arm.validate();
  for (const TaskParams* t : {&ball, &bottle}) {
    if (!(t->object_radius > 0.0)) throw ConfigError("object radius must be positive");
    if (!(t->aperture_lo < t->aperture_hi)) throw ConfigError("aperture band is not ordered");
  }
  if (!(contact_margin > success_margin)) {
    throw ConfigError("contact margin must exceed the success margin");
  }
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (!(joint_step > 0.0 && wrist_step > 0.0 && aperture_step > 0.0)) {
    throw ConfigError("action scales must be positive");
  }
  if (link_samples < 1) throw ConfigError("link_samples must be >= 1");
}

namespace {

nlohmann::json vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec(const nlohmann::json& j) {
  const auto a = j.get<std::array<double, 3>>();
  return {a[0], a[1], a[2]};
}

nlohmann::json task_json(const TaskParams& t) {
  return {{"object_radius", t.object_radius},
          {"object_center_height", t.object_center_height},
          {"aperture_band", {t.aperture_lo, t.aperture_hi}},
          {"grasp_aperture", t.grasp_aperture}};
}

void read_task(const nlohmann::json& j, TaskParams& t) {
  t.object_radius = j.value("object_radius", t.object_radius);
  t.object_center_height = j.value("object_center_height", t.object_center_height);
  if (j.contains("aperture_band")) {
    const auto band = j["aperture_band"].get<std::array<double, 2>>();
    t.aperture_lo = band[0];
    t.aperture_hi = band[1];
  }
  t.grasp_aperture = j.value("grasp_aperture", t.grasp_aperture);
}

}  // namespace

void to_json(nlohmann::json& j, const SceneConfig& c) {
  nlohmann::json limits = nlohmann::json::array();
  for (const auto& l : c.arm.joint_limits) limits.push_back({l.lo, l.hi});
  j = {
      {"arm",
       {{"link_lengths", c.arm.link_lengths},
        {"joint_limits", limits},
        {"wrist_limit", {c.arm.wrist_limit.lo, c.arm.wrist_limit.hi}},
        {"base_position", vec(c.arm.base_position)}}},
      {"reward",
       {{"xi1", c.reward.xi1},
        {"xi2", c.reward.xi2},
        {"xi3", c.reward.xi3},
        {"z1", c.reward.z1},
        {"z2", c.reward.z2},
        {"z3", c.reward.z3},
        {"z4", c.reward.z4},
        {"z5", c.reward.z5},
        {"lambda_th", c.reward.lambda_th}}},
      {"ball", task_json(c.ball)},
      {"bottle", task_json(c.bottle)},
      {"success_margin", c.success_margin},
      {"contact_margin", c.contact_margin},
      {"grip_offset", c.grip_offset},
      {"terminate_on_contact", c.terminate_on_contact},
      {"joint_step", c.joint_step},
      {"wrist_step", c.wrist_step},
      {"aperture_step", c.aperture_step},
      {"max_steps", c.max_steps},
      {"home_q", std::vector<double>(c.home_q.data(), c.home_q.data() + kNumJoints)},
      {"home_wrist", c.home_wrist},
      {"home_aperture", c.home_aperture},
      {"home_jitter", c.home_jitter},
      {"object_box", {{"lo", vec(c.object_box.lo)}, {"hi", vec(c.object_box.hi)}}},
      {"workspace", {{"lo", vec(c.workspace.lo)}, {"hi", vec(c.workspace.hi)}}},
      {"link_samples", c.link_samples},
  };
}

void from_json(const nlohmann::json& j, SceneConfig& c) {
  if (j.contains("arm")) {
    const auto& a = j["arm"];
    if (a.contains("link_lengths")) {
      c.arm.link_lengths = a["link_lengths"].get<std::array<double, kNumJoints>>();
    }
    if (a.contains("joint_limits")) {
      const auto lim = a["joint_limits"].get<std::vector<std::array<double, 2>>>();
      if (lim.size() != kNumJoints) throw ConfigError("joint_limits needs 6 pairs");
      for (int i = 0; i < kNumJoints; ++i) c.arm.joint_limits[i] = {lim[i][0], lim[i][1]};
    }
    if (a.contains("wrist_limit")) {
      const auto w = a["wrist_limit"].get<std::array<double, 2>>();
      c.arm.wrist_limit = {w[0], w[1]};
    }
    if (a.contains("base_position")) c.arm.base_position = vec(a["base_position"]);
  }
  if (j.contains("reward")) {
    const auto& r = j["reward"];
    auto& w = c.reward;
    w.xi1 = r.value("xi1", w.xi1);
    w.xi2 = r.value("xi2", w.xi2);
    w.xi3 = r.value("xi3", w.xi3);
    w.z1 = r.value("z1", w.z1);
    w.z2 = r.value("z2", w.z2);
    w.z3 = r.value("z3", w.z3);
    w.z4 = r.value("z4", w.z4);
    w.z5 = r.value("z5", w.z5);
    w.lambda_th = r.value("lambda_th", w.lambda_th);
  }
  if (j.contains("ball")) read_task(j["ball"], c.ball);
  if (j.contains("bottle")) read_task(j["bottle"], c.bottle);
  c.success_margin = j.value("success_margin", c.success_margin);
  c.contact_margin = j.value("contact_margin", c.contact_margin);
  c.grip_offset = j.value("grip_offset", c.grip_offset);
  c.terminate_on_contact = j.value("terminate_on_contact", c.terminate_on_contact);
  c.joint_step = j.value("joint_step", c.joint_step);
  c.wrist_step = j.value("wrist_step", c.wrist_step);
  c.aperture_step = j.value("aperture_step", c.aperture_step);
  c.max_steps = j.value("max_steps", c.max_steps);
  if (j.contains("home_q")) {
    const auto h = j["home_q"].get<std::array<double, kNumJoints>>();
    for (int i = 0; i < kNumJoints; ++i) c.home_q(i) = h[i];
  }
  c.home_wrist = j.value("home_wrist", c.home_wrist);
  c.home_aperture = j.value("home_aperture", c.home_aperture);
  c.home_jitter = j.value("home_jitter", c.home_jitter);
  if (j.contains("object_box")) {
    c.object_box = {vec(j["object_box"]["lo"]), vec(j["object_box"]["hi"])};
  }
  if (j.contains("workspace")) {
    c.workspace = {vec(j["workspace"]["lo"]), vec(j["workspace"]["hi"])};
  }
  c.link_samples = j.value("link_samples", c.link_samples);
  c.validate();
}

}  // namespace dexgrasp::env
