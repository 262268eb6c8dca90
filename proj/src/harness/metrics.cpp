#include "dexgrasp/harness/metrics.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace dexgrasp::harness {

bool IterationMetrics::operator==(const IterationMetrics& o) const {
  return iter == o.iter && env_steps == o.env_steps && updates == o.updates &&
         mean_reward == o.mean_reward && success_rate == o.success_rate &&
         loss_q1 == o.loss_q1 && loss_q2 == o.loss_q2 && loss_pi == o.loss_pi &&
         loss_cl == o.loss_cl && entropy == o.entropy;
}

std::string metrics_row(const IterationMetrics& m) {
  return fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", m.iter,
                     m.env_steps, m.updates, m.mean_reward, m.success_rate, m.loss_q1, m.loss_q2,
                     m.loss_pi, m.loss_cl, m.entropy);
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<IterationMetrics>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(fmt::format("cannot write {}", path.string()));
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << metrics_row(r) << '\n';
}

namespace {

template <typename T>
T parse_field(const std::string& s, std::size_t line) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError(fmt::format("metrics line {}: bad number '{}'", line, s));
  }
  return v;
}

}  // namespace

std::vector<IterationMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw FormatError(fmt::format("{}: unexpected metrics header", path.string()));
  }
  std::vector<IterationMetrics> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 10) {
      throw FormatError(fmt::format("metrics line {}: {} columns, expected 10", lineno, f.size()));
    }
    IterationMetrics m;
    m.iter = parse_field<int>(f[0], lineno);
    m.env_steps = parse_field<std::int64_t>(f[1], lineno);
    m.updates = parse_field<std::int64_t>(f[2], lineno);
    m.mean_reward = parse_field<double>(f[3], lineno);
    m.success_rate = parse_field<double>(f[4], lineno);
    m.loss_q1 = parse_field<double>(f[5], lineno);
    m.loss_q2 = parse_field<double>(f[6], lineno);
    m.loss_pi = parse_field<double>(f[7], lineno);
    m.loss_cl = parse_field<double>(f[8], lineno);
    m.entropy = parse_field<double>(f[9], lineno);
    rows.push_back(m);
  }
  return rows;
}

std::optional<int> iterations_to_threshold(const std::vector<IterationMetrics>& rows,
                                           double threshold) {
  for (const auto& r : rows) {
    if (r.success_rate >= threshold) return r.iter;
  }
  return std::nullopt;
}

}  // namespace dexgrasp::harness
