#include "criteria.hpp"

#include "dexgrasp/errors.hpp"
#include "dexgrasp/harness/ablation.hpp"
#include "dexgrasp/harness/train.hpp"
#include "dexgrasp/random.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dexgrasp;
using namespace dexgrasp::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dexgrasp_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig small_run(const fs::path& out, Method m) {
  RunConfig c;
  c.method = m;
  c.seed = 3;
  c.total_iterations = 1;
  c.steps_per_iteration = 250;
  c.eval_episodes = 3;
  c.sac.warmup_steps = 100;
  c.sac.batch_size = 32;
  c.bc.epochs = 50;
  c.output_dir = out;
  return c;
}

const fs::path& shared_demos() {
  static const fs::path p = [] {
    const fs::path dir = temp_dir("demos");
    demo::save(demo::collect_demos(15, env::Task::Ball, 0.05, 21), dir / "demos.jsonl");
    return dir / "demos.jsonl";
  }();
  return p;
}

}  // namespace

TEST_CASE("run config round-trips through JSON") {
  RunConfig c;
  c.task = env::Task::Bottle;
  c.seed = 99;
  c.method = Method::BcSac;
  c.sac.alpha = 0.25;
  c.cl.mode = agent::ClMode::Standard;
  c.scene.max_steps = 80;
  c.demos_path = "a/b.jsonl";
  const fs::path p = temp_dir("config") / "c.json";
  save_run_config(p, c);
  const RunConfig back = load_run_config(p);
  CHECK(nlohmann::json(back) == nlohmann::json(c));
  CHECK(back.sac.alpha == 0.25);
  CHECK(back.scene.max_steps == 80);

  nlohmann::json j = c;
  j["method"] = "ppo";
  std::ofstream(p) << j.dump();
  CHECK_THROWS_AS(load_run_config(p), ConfigError);
  c.total_iterations = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("method flags") {
  CHECK(!uses_bc(Method::Sac));
  CHECK(uses_bc(Method::BcSac));
  CHECK(!uses_head(Method::BcSac));
  CHECK(uses_head(Method::BcSacCl));
  CHECK(method_from_string(to_string(Method::BcSacCl)) == Method::BcSacCl);
}

TEST_CASE("files round-trip and deployment drops the head") {
  const criteria::Verdict v = criteria::persistence(temp_dir("persist"));
  INFO(v.detail);
  CHECK(v.pass);
}

TEST_CASE("metrics CSV errors name the line") {
  const fs::path p = temp_dir("csv") / "m.csv";
  std::ofstream(p) << kMetricsHeader << "\n0,0,0,1,0.5,0,0,0,0,0\n1,2,3,x,0,0,0,0,0,0\n";
  CHECK_THROWS_WITH_AS(read_metrics_csv(p), doctest::Contains("line 3"), FormatError);
  std::ofstream(p, std::ios::trunc) << "iter,reward\n";
  CHECK_THROWS_AS(read_metrics_csv(p), FormatError);
}

TEST_CASE("iterations to threshold") {
  std::vector<IterationMetrics> rows(4);
  for (int i = 0; i < 4; ++i) rows[i].iter = i;
  rows[2].success_rate = 0.8;
  CHECK(iterations_to_threshold(rows) == 2);
  rows[2].success_rate = 0.79;
  CHECK(!iterations_to_threshold(rows).has_value());
}

TEST_CASE("bc methods refuse to run without demonstrations") {
  RunConfig c = small_run(temp_dir("nodemos"), Method::BcSac);
  CHECK_THROWS_AS(train(c), ConfigError);
  c.demos_path = c.output_dir / "missing.jsonl";
  CHECK_THROWS_AS(train(c), ConfigError);
}

TEST_CASE("seeded runs reproduce their files byte for byte") {
  const fs::path root = temp_dir("repro");
  RunConfig a = small_run(root / "a", Method::BcSacCl);
  a.demos_path = shared_demos();
  RunConfig b = a;
  b.output_dir = root / "b";
  const RunResult ra = train(a), rb = train(b);
  CHECK(ra.metrics == rb.metrics);
  for (const char* f : {"metrics.csv", "final.ckpt", "last.ckpt", "bc.ckpt"}) {
    INFO(f);
    REQUIRE(fs::exists(root / "a" / f));
    CHECK(read_bytes(root / "a" / f) == read_bytes(root / "b" / f));
  }
  CHECK(read_metrics_csv(root / "a" / "metrics.csv") == ra.metrics);
  CHECK(ra.metrics.size() == 2);
  CHECK(ra.metrics[1].env_steps == 250);
  CHECK(ra.metrics[1].updates == 151);  // steps 100..250 inclusive

  const nn::Checkpoint last = nn::load_checkpoint(root / "a" / "last.ckpt");
  CHECK(last.has_network("head"));
  CHECK(last.has_network("q2_target"));
  const nn::Checkpoint fin = nn::load_checkpoint(root / "a" / "final.ckpt");
  CHECK(!fin.has_network("head"));
  CHECK(!fin.has_network("q1"));
  CHECK(load_actor(root / "a" / "final.ckpt") == load_actor(root / "a" / "last.ckpt"));
}

TEST_CASE("pure SAC has no head in its checkpoints") {
  const fs::path root = temp_dir("sac");
  const RunResult r = train(small_run(root, Method::Sac));
  CHECK(!r.bc.has_value());
  CHECK(!fs::exists(root / "bc.ckpt"));
  CHECK(!nn::load_checkpoint(root / "last.ckpt").has_network("head"));
  for (const auto& m : r.metrics) CHECK(m.loss_cl == 0.0);
}

TEST_CASE("zero RL iterations evaluate the cloned policy and give a head start") {
  const fs::path root = temp_dir("zero");
  RunConfig c = small_run(root / "bc", Method::BcSac);
  c.total_iterations = 0;
  c.eval_episodes = 20;
  c.bc.epochs = 1000;
  c.demos_path = shared_demos();
  const RunResult r = train(c);
  REQUIRE(r.metrics.size() == 1);
  CHECK(r.metrics[0].updates == 0);

  // same numbers from the saved BC checkpoint
  const EvalResult direct = evaluate(greedy_policy(load_actor(root / "bc" / "bc.ckpt")), c.scene,
                                     c.task, c.eval_episodes, eval_seed(c.seed));
  CHECK(direct.success_rate == r.metrics[0].success_rate);
  CHECK(direct.mean_reward == r.metrics[0].mean_reward);
  CHECK(r.metrics[0].success_rate > 0.0);

  RunConfig s = c;
  s.method = Method::Sac;
  s.output_dir = root / "sac";
  CHECK(train(s).metrics[0].success_rate == 0.0);
}

TEST_CASE("turning the contrastive weight off reproduces bc_sac exactly") {
  const criteria::Verdict v = criteria::ablation_switch_exactness(temp_dir("switch"));
  INFO(v.detail);
  CHECK(v.pass);
}

TEST_CASE("evaluation baselines") {
  const env::SceneConfig scene;
  auto rng = std::make_shared<std::mt19937_64>(4);
  const Policy random = [rng](const env::Observation&) {
    std::uniform_real_distribution<double> u(-1, 1);
    env::Action a;
    for (int j = 0; j < env::kActDim; ++j) a(j) = u(*rng);
    return a;
  };
  CHECK(evaluate(random, scene, env::Task::Ball, 100, 1).success_rate < 0.05);
  CHECK_THROWS_AS(evaluate(random, scene, env::Task::Ball, 0, 1), ConfigError);

  // replaying recorded expert actions from the recorded seed succeeds every time
  const demo::DemoSet demos = demo::load(shared_demos());
  env::GraspEnv e(scene);
  int successes = 0;
  for (const auto& t : demos.trajectories()) {
    e.reset(t.seed, t.task);
    env::StepResult r;
    for (const auto& s : t.steps) r = e.step(s.act);
    successes += r.reward.event == env::Event::Success;
  }
  CHECK(successes == static_cast<int>(demos.trajectories().size()));
}

TEST_CASE("evaluation traces one JSON line per step") {
  std::ostringstream trace;
  const EvalResult r = evaluate(expert_policy({}, env::Task::Bottle), {}, env::Task::Bottle, 2, 5, &trace);
  std::istringstream in(trace.str());
  int lines = 0;
  for (std::string l; std::getline(in, l); ++lines) {
    const auto j = nlohmann::json::parse(l);
    CHECK(j.at("obs").size() == 20);
    CHECK(j.at("action").size() == 8);
    CHECK(j.at("reward_breakdown").contains("pose"));
  }
  CHECK(lines == r.episodes[0].length + r.episodes[1].length);
  CHECK(r.episodes[0].seed == eval_episode_seed(5, 0));
}

TEST_CASE("ablation summaries, warnings and curves") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);

  auto run = [](Method m, std::uint64_t seed, std::vector<double> success) {
    AblationRun r;
    r.method = m;
    r.seed = seed;
    r.ok = true;
    for (std::size_t i = 0; i < success.size(); ++i) {
      IterationMetrics row;
      row.iter = static_cast<int>(i);
      row.success_rate = success[i];
      row.mean_reward = 100.0 * success[i];
      r.metrics.push_back(row);
    }
    return r;
  };
  std::vector<AblationRun> runs;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    runs.push_back(run(Method::Sac, s, {0.0, 0.1, 0.5}));
    runs.push_back(run(Method::BcSac, s, {0.5, 0.8, 0.85}));
    runs.push_back(run(Method::BcSacCl, s, {0.5, 0.9, 0.9}));
  }
  const AblationReport rep = summarize(runs, 2);
  REQUIRE(rep.summaries.size() == 3);
  CHECK(rep.summaries[0].median_iterations_to_threshold == 3.0);
  CHECK(rep.summaries[1].median_iterations_to_threshold == 1.0);
  CHECK(rep.summaries[2].median_final_success == 0.9);
  CHECK(rep.ordering_holds);
  CHECK(rep.head_start_holds);
  CHECK(rep.warnings.empty());

  const std::string svg = render_curves_svg(rep);
  CHECK(svg.rfind("<svg", 0) == 0);
  std::size_t lines = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++lines;
  CHECK(lines == 3);

  std::vector<AblationRun> few(runs.begin(), runs.begin() + 3);
  few[0].ok = false;
  few[0].error = "boom";
  const AblationReport thin = summarize(few, 2);
  CHECK(thin.warnings.size() == 2);
  CHECK(report_json(thin)["warnings"].size() == 2);
}
