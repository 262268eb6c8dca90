#pragma once

#include "dexgrasp/harness/train.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dexgrasp::harness {

struct AblationRun {
  Method method = Method::Sac;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<IterationMetrics> metrics;
};

struct MethodSummary {
  Method method = Method::Sac;
  int runs = 0;
  double median_final_success = 0.0;
  double median_final_reward = 0.0;
  /// Runs that never reach the threshold count as total_iterations + 1.
  double median_iterations_to_threshold = 0.0;
};

struct AblationReport {
  std::vector<AblationRun> runs;
  std::vector<MethodSummary> summaries;  // sac, bc_sac, bc_sac_cl
  std::vector<std::string> warnings;
  bool ordering_holds = false;       // success(cl) >= success(bc) >= success(sac)
  bool head_start_holds = false;     // both bc methods converge strictly earlier than sac
};

double median(std::vector<double> v);

/// Summaries and directional checks from finished runs.
AblationReport summarize(std::vector<AblationRun> runs, int total_iterations, double threshold = 0.8);

/// Runs every method for every seed under `base.output_dir`/<method>_seed<k>.
/// When `base.demos_path` is empty each seed collects its own 15 scripted
/// demonstrations (noise 0.05). A failed run is recorded and the rest go on.
/// Writes base_config.json, curves.csv, curves.svg and report.json in `base.output_dir`.
AblationReport run_ablation(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                            int demos_per_seed = 15);

/// Median reward-vs-iteration curve per method, one polyline each.
std::string render_curves_svg(const AblationReport& report);
void write_curves_csv(const std::filesystem::path& path, const AblationReport& report);
nlohmann::json report_json(const AblationReport& report);

}  // namespace dexgrasp::harness
