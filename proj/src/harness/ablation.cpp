#include "dexgrasp/harness/ablation.hpp"

#include "dexgrasp/demo/expert.hpp"
#include "dexgrasp/errors.hpp"
#include "dexgrasp/random.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace dexgrasp::harness {

namespace fs = std::filesystem;

namespace {

constexpr Method kMethods[] = {Method::Sac, Method::BcSac, Method::BcSacCl};

const char* color(Method m) {
  switch (m) {
    case Method::Sac: return "#888888";
    case Method::BcSac: return "#1f77b4";
    case Method::BcSacCl: return "#d62728";
  }
  return "#000000";
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

AblationReport summarize(std::vector<AblationRun> runs, int total_iterations, double threshold) {
  AblationReport rep;
  rep.runs = std::move(runs);
  std::size_t seeds = 0;
  for (Method m : kMethods) {
    MethodSummary s;
    s.method = m;
    std::vector<double> success, reward, to_thr;
    for (const auto& r : rep.runs) {
      if (r.method != m || !r.ok || r.metrics.empty()) continue;
      ++s.runs;
      success.push_back(r.metrics.back().success_rate);
      reward.push_back(r.metrics.back().mean_reward);
      const auto it = iterations_to_threshold(r.metrics, threshold);
      to_thr.push_back(it ? *it : total_iterations + 1);
    }
    s.median_final_success = median(success);
    s.median_final_reward = median(reward);
    s.median_iterations_to_threshold = median(to_thr);
    seeds = std::max(seeds, static_cast<std::size_t>(s.runs));
    rep.summaries.push_back(s);
  }
  for (const auto& r : rep.runs) {
    if (!r.ok) rep.warnings.push_back(fmt::format("{} seed {} failed: {}", to_string(r.method),
                                                  r.seed, r.error));
  }
  if (seeds < 3) {
    rep.warnings.push_back(fmt::format("only {} seed(s) per method; medians are not reliable", seeds));
  }
  const auto& sac = rep.summaries[0];
  const auto& bc = rep.summaries[1];
  const auto& cl = rep.summaries[2];
  rep.ordering_holds = cl.median_final_success >= bc.median_final_success &&
                       bc.median_final_success >= sac.median_final_success;
  rep.head_start_holds = bc.median_iterations_to_threshold < sac.median_iterations_to_threshold &&
                         cl.median_iterations_to_threshold < sac.median_iterations_to_threshold;
  return rep;
}

AblationReport run_ablation(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                            int demos_per_seed) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  fs::create_directories(base.output_dir);
  save_run_config(base.output_dir / "base_config.json", base);
  std::vector<AblationRun> runs;
  for (std::uint64_t seed : seeds) {
    fs::path demos_path = base.demos_path;
    std::string demo_error;
    if (demos_path.empty()) {
      demos_path = base.output_dir / fmt::format("demos_seed{}.jsonl", seed);
      try {
        demo::save(demo::collect_demos(demos_per_seed, base.task, 0.05,
                                       derive_seed(seed, "ablation.demos"), base.scene),
                   demos_path);
      } catch (const std::exception& e) {
        demo_error = e.what();
      }
    }
    for (Method m : kMethods) {
      AblationRun run;
      run.method = m;
      run.seed = seed;
      RunConfig cfg = base;
      cfg.method = m;
      cfg.seed = seed;
      cfg.demos_path = demos_path;
      cfg.output_dir = base.output_dir / fmt::format("{}_seed{}", to_string(m), seed);
      if (!demo_error.empty() && uses_bc(m)) {
        run.error = "demonstration collection failed: " + demo_error;
      } else {
        try {
          run.metrics = train(cfg).metrics;
          run.ok = true;
        } catch (const std::exception& e) {
          run.error = e.what();
          spdlog::error("{} seed {} failed: {}", to_string(m), seed, e.what());
        }
      }
      runs.push_back(std::move(run));
    }
  }
  AblationReport rep = summarize(std::move(runs), base.total_iterations);
  write_curves_csv(base.output_dir / "curves.csv", rep);
  std::ofstream(base.output_dir / "curves.svg") << render_curves_svg(rep);
  std::ofstream(base.output_dir / "report.json") << report_json(rep).dump(2) << '\n';
  for (const auto& w : rep.warnings) spdlog::warn("{}", w);
  return rep;
}

void write_curves_csv(const fs::path& path, const AblationReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write {}", path.string()));
  out << "method,seed,iter,env_steps,mean_reward,success_rate\n";
  for (const auto& r : report.runs) {
    for (const auto& m : r.metrics) {
      out << fmt::format("{},{},{},{},{:.17g},{:.17g}\n", to_string(r.method), r.seed, m.iter,
                         m.env_steps, m.mean_reward, m.success_rate);
    }
  }
}

std::string render_curves_svg(const AblationReport& report) {
  // Median curve per method over the iterations every successful run reached.
  struct Curve {
    Method method;
    std::vector<double> reward;
  };
  std::vector<Curve> curves;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t max_len = 0;
  for (Method m : kMethods) {
    std::vector<const AblationRun*> ok;
    for (const auto& r : report.runs) {
      if (r.method == m && r.ok && !r.metrics.empty()) ok.push_back(&r);
    }
    if (ok.empty()) continue;
    std::size_t len = ok.front()->metrics.size();
    for (const auto* r : ok) len = std::min(len, r->metrics.size());
    Curve c{m, {}};
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<double> v;
      for (const auto* r : ok) v.push_back(r->metrics[i].mean_reward);
      c.reward.push_back(median(v));
      lo = std::min(lo, c.reward.back());
      hi = std::max(hi, c.reward.back());
    }
    max_len = std::max(max_len, len);
    curves.push_back(std::move(c));
  }
  const double W = 640, H = 400, L = 70, R = 20, T = 30, B = 50;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H);
  if (curves.empty()) return svg + "<text x=\"20\" y=\"40\">no finished runs</text>\n</svg>\n";
  if (!(hi > lo)) {
    hi = lo + 1.0;
  }
  const double xs = max_len > 1 ? (W - L - R) / static_cast<double>(max_len - 1) : 0.0;
  auto px = [&](std::size_t i) { return L + xs * static_cast<double>(i); };
  auto py = [&](double v) { return T + (H - T - B) * (hi - v) / (hi - lo); };
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{3}\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/>\n",
      L, H - B, W - R, T);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">iteration</text>\n",
                     (L + W - R) / 2, H - 12);
  svg += fmt::format(
      "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">"
      "median mean reward</text>\n",
      (T + H - B) / 2, (T + H - B) / 2);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.0f}</text>\n", L - 4,
                     py(hi) + 4, hi);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.0f}</text>\n", L - 4,
                     py(lo) + 4, lo);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">0</text>\n", px(0), H - B + 16);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(max_len - 1),
                     H - B + 16, max_len - 1);
  int legend = 0;
  for (const auto& c : curves) {
    std::string pts;
    for (std::size_t i = 0; i < c.reward.size(); ++i) {
      pts += fmt::format("{:.2f},{:.2f} ", px(i), py(c.reward[i]));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                       color(c.method), pts);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", L + 10,
                       T + 14 + 16 * legend++, color(c.method), to_string(c.method));
  }
  return svg + "</svg>\n";
}

nlohmann::json report_json(const AblationReport& report) {
  nlohmann::json j;
  for (const auto& s : report.summaries) {
    j["methods"][std::string(to_string(s.method))] = {
        {"runs", s.runs},
        {"median_final_success", s.median_final_success},
        {"median_final_reward", s.median_final_reward},
        {"median_iterations_to_0.8", s.median_iterations_to_threshold}};
  }
  j["ordering_holds"] = report.ordering_holds;
  j["head_start_holds"] = report.head_start_holds;
  j["warnings"] = report.warnings;
  for (const auto& r : report.runs) {
    j["runs"].push_back({{"method", to_string(r.method)},
                         {"seed", r.seed},
                         {"ok", r.ok},
                         {"error", r.error},
                         {"iterations", r.metrics.empty() ? 0 : r.metrics.back().iter}});
  }
  return j;
}

}  // namespace dexgrasp::harness
