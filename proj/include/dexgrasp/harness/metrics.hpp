#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dexgrasp::harness {

/// One row per iteration. Loss columns are means over that iteration's
/// updates (0 when there were none). Wall time is logged, never written to the
/// CSV, so seeded runs reproduce the file byte for byte.
struct IterationMetrics {
  int iter = 0;
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double loss_q1 = 0.0;
  double loss_q2 = 0.0;
  double loss_pi = 0.0;
  double loss_cl = 0.0;
  double entropy = 0.0;
  double wall_seconds = 0.0;

  /// Equality ignores wall time.
  bool operator==(const IterationMetrics& o) const;
};

inline constexpr const char* kMetricsHeader =
    "iter,env_steps,updates,mean_reward,success_rate,L_q1,L_q2,L_pi,L_cl,entropy_estimate";

std::string metrics_row(const IterationMetrics& m);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<IterationMetrics>& rows);
/// Throws FormatError naming the line on a bad header, column count or number.
std::vector<IterationMetrics> read_metrics_csv(const std::filesystem::path& path);

/// First iteration whose success rate reaches `threshold`.
std::optional<int> iterations_to_threshold(const std::vector<IterationMetrics>& rows,
                                           double threshold = 0.8);

}  // namespace dexgrasp::harness
