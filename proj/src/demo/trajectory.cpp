#include "dexgrasp/demo/trajectory.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

namespace dexgrasp::demo {

namespace {

constexpr int kVersion = 1;

// nlohmann's dump already round-trips doubles, but writing by hand keeps the
// 17-digit form stable across library versions.
void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw FormatError("cannot serialize a non-finite value");
  // "-0" would read back as the integer 0 and lose the sign
  if (v == 0.0 && std::signbit(v)) {
    out += "-0.0";
    return;
  }
  fmt::format_to(std::back_inserter(out), "{:.17g}", v);
}

template <class Vec>
void append_array(std::string& out, const Vec& v) {
  out.push_back('[');
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    append_double(out, v(i));
  }
  out.push_back(']');
}

template <int N>
Eigen::Matrix<double, N, 1> read_vector(const nlohmann::json& j, const char* key,
                                         std::size_t line) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw FormatError(fmt::format("line {}: missing array '{}'", line, key));
  }
  const auto& a = j[key];
  if (a.size() != static_cast<std::size_t>(N)) {
    throw FormatError(
        fmt::format("line {}: '{}' has {} elements, expected {}", line, key, a.size(), N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!a[i].is_number()) {
      throw FormatError(fmt::format("line {}: '{}'[{}] is not a number", line, key, i));
    }
    v(i) = a[i].get<double>();
  }
  return v;
}

}  // namespace

std::string_view to_string(Source s) { return s == Source::Scripted ? "scripted" : "teleop"; }

Source source_from_string(std::string_view s) {
  if (s == "scripted") return Source::Scripted;
  if (s == "teleop") return Source::Teleop;
  throw FormatError(fmt::format("unknown source '{}'", s));
}

std::string utc_timestamp() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

void Trajectory::validate() const {
  if (steps.empty()) throw FormatError("trajectory has no steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Step& s = steps[i];
    if (!s.obs.allFinite() || !s.act.allFinite() || !std::isfinite(s.reward)) {
      throw FormatError(fmt::format("step {}: non-finite value", i));
    }
    if (s.done != (i + 1 == steps.size())) {
      throw FormatError(fmt::format("step {}: done flag must be set on the last step only", i));
    }
  }
}

DemoSet::DemoSet(std::vector<Trajectory> trajectories) : trajectories_(std::move(trajectories)) {
  for (std::size_t t = 0; t < trajectories_.size(); ++t) {
    trajectories_[t].validate();
    for (std::size_t k = 0; k < trajectories_[t].steps.size(); ++k) {
      index_.emplace_back(static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(k));
    }
  }
}

const Step& DemoSet::pair(std::size_t i) const {
  const auto [t, k] = index_.at(i);
  return trajectories_[t].steps[k];
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> DemoSet::all_pairs() const {
  Eigen::MatrixXd s(num_pairs(), env::kObsDim);
  Eigen::MatrixXd a(num_pairs(), env::kActDim);
  for (std::size_t i = 0; i < num_pairs(); ++i) {
    s.row(i) = pair(i).obs.transpose();
    a.row(i) = pair(i).act.transpose();
  }
  return {std::move(s), std::move(a)};
}

ExpertBatch sample_expert_batch(const DemoSet& set, int batch_size, std::mt19937_64& rng) {
  if (set.empty()) throw ContractViolation("cannot sample from an empty demonstration set");
  if (batch_size <= 0) throw ContractViolation("batch size must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, set.num_pairs() - 1);
  ExpertBatch b{Eigen::MatrixXd(batch_size, env::kObsDim),
                Eigen::MatrixXd(batch_size, env::kActDim)};
  for (int i = 0; i < batch_size; ++i) {
    const Step& s = set.pair(pick(rng));
    b.states.row(i) = s.obs.transpose();
    b.actions.row(i) = s.act.transpose();
  }
  return b;
}

ExpertBatch sample_expert_batch(const DemoSet& set, int batch_size, std::uint64_t seed) {
  auto rng = make_rng(seed, "demo.sample");
  return sample_expert_batch(set, batch_size, rng);
}

void write_trajectory(std::ostream& out, const Trajectory& t) {
  nlohmann::json header = {{"version", kVersion},
                           {"task", env::to_string(t.task)},
                           {"obs_dim", env::kObsDim},
                           {"act_dim", env::kActDim},
                           {"source", to_string(t.source)},
                           {"seed", t.seed},
                           {"created_at", t.created_at},
                           {"steps", t.steps.size()}};
  out << header.dump() << '\n';
  std::string line;
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    const Step& s = t.steps[k];
    line.clear();
    fmt::format_to(std::back_inserter(line), "{{\"t\":{},\"obs\":", k);
    append_array(line, s.obs);
    line += ",\"act\":";
    append_array(line, s.act);
    line += ",\"r\":";
    append_double(line, s.reward);
    fmt::format_to(std::back_inserter(line), ",\"event\":\"{}\",\"done\":{}}}\n",
                   env::to_string(s.event), s.done ? "true" : "false");
    out << line;
  }
}

void save(const DemoSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open '{}' for writing", path.string()));
  for (const Trajectory& t : set.trajectories()) write_trajectory(out, t);
  if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

DemoSet load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));

  std::vector<Trajectory> out;
  std::string text;
  std::size_t line_no = 0;
  std::size_t remaining = 0;
  auto parse = [&](const std::string& s) {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("line {}: invalid JSON ({})", line_no, e.what()));
    }
  };
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) throw FormatError(fmt::format("line {}: empty line", line_no));
    const nlohmann::json j = parse(text);
    if (remaining == 0) {
      const int version = j.value("version", -1);
      if (version != kVersion) {
        throw FormatError(fmt::format("line {}: unsupported version {}", line_no, version));
      }
      if (j.value("obs_dim", -1) != env::kObsDim || j.value("act_dim", -1) != env::kActDim) {
        throw FormatError(fmt::format("line {}: header arity must be obs_dim={} act_dim={}",
                                      line_no, env::kObsDim, env::kActDim));
      }
      Trajectory t;
      try {
        t.task = env::task_from_string(j.at("task").get<std::string>());
        t.source = source_from_string(j.at("source").get<std::string>());
        t.seed = j.value("seed", std::uint64_t{0});
        t.created_at = j.value("created_at", std::string{});
        remaining = j.at("steps").get<std::size_t>();
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("line {}: bad header ({})", line_no, e.what()));
      } catch (const ConfigError& e) {
        throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
      }
      if (remaining == 0) throw FormatError(fmt::format("line {}: trajectory has no steps", line_no));
      t.steps.reserve(remaining);
      out.push_back(std::move(t));
      continue;
    }
    Trajectory& t = out.back();
    Step s;
    if (j.value("t", std::size_t{0}) != t.steps.size()) {
      throw FormatError(fmt::format("line {}: step index out of order", line_no));
    }
    s.obs = read_vector<env::kObsDim>(j, "obs", line_no);
    s.act = read_vector<env::kActDim>(j, "act", line_no);
    try {
      s.reward = j.at("r").get<double>();
      s.event = env::event_from_string(j.at("event").get<std::string>());
      s.done = j.at("done").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("line {}: bad step ({})", line_no, e.what()));
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
    }
    t.steps.push_back(s);
    --remaining;
  }
  if (remaining != 0) {
    throw FormatError(fmt::format("truncated file: trajectory {} is missing {} step(s)",
                                  out.size() - 1, remaining));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    try {
      out[i].validate();
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("trajectory {}: {}", i, e.what()));
    }
  }
  return DemoSet(std::move(out));
}

}  // namespace dexgrasp::demo
