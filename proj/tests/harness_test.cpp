#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bodydisc/config_io.hpp"
#include "bodydisc/harness.hpp"
#include "bodydisc/sim.hpp"

namespace bodydisc {
namespace {

// Small worlds keep these tests fast; the acceptance binary runs full size.
TaskConfig Small(TaskId task, std::uint64_t seed = 1) {
  TaskConfig cfg = default_task_config(task);
  cfg.objects = 16;
  cfg.body_objects = 4;
  cfg.signals = 3;
  cfg.stages = 80;
  cfg.seed = seed;
  return cfg;
}

RunOptions Fast() {
  RunOptions o;
  o.mc_samples = 300;
  return o;
}

TEST(MethodTest, NamesRoundTrip) {
  for (auto m : all_methods()) EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_EQ(parse_method_list("all").size(), 5u);
  EXPECT_EQ(parse_method_list("baseline-0.01,frt-0.05"), (std::vector<Method>{Method::Frt05, Method::Baseline01}));
  EXPECT_THROW(method_from_string("frt-0.1"), ConfigError);
}

TEST(RoundTest, NoiseFreeLightsAreFound) {
  auto cfg = default_task_config(TaskId::T4);
  cfg.noise = NoiseConfig{};
  cfg.seed = 12;
  auto r = run_round(cfg, Method::FrtBonferroni, RunOptions{});
  EXPECT_GE(*r.metrics.recall, 0.99);
}

TEST(RoundTest, SameInputsSameBytes) {
  auto cfg = Small(TaskId::T8, 5);
  auto a = run_round(cfg, Method::Frt05, Fast());
  auto b = run_round(cfg, Method::Frt05, Fast());
  EXPECT_EQ(a.serialize(), b.serialize());
  auto c = run_round(Small(TaskId::T8, 6), Method::Frt05, Fast());
  EXPECT_NE(a.serialize(), c.serialize());
}

TEST(RoundTest, InferenceWorkersDoNotChangeResults) {
  auto cfg = Small(TaskId::T5, 3);
  auto one = Fast();
  auto four = Fast();
  four.workers = 4;
  EXPECT_EQ(run_round(cfg, Method::FrtBonferroni, one).serialize(),
            run_round(cfg, Method::FrtBonferroni, four).serialize());
}

TEST(RoundTest, BaselineReportsItsInterval) {
  auto r = run_round(Small(TaskId::T1, 2), Method::Baseline05, Fast());
  EXPECT_TRUE(r.report.contains("variance"));
  EXPECT_TRUE(r.report.contains("critical"));
}

TEST(ConfigHashTest, ChangesWithMeaningfulFieldsOnly) {
  auto cfg = Small(TaskId::T8, 1);
  const auto h = config_hash(cfg);
  auto reseeded = cfg;
  reseeded.seed = 99;
  EXPECT_EQ(config_hash(reseeded), h);
  auto noisier = cfg;
  noisier.noise.n4 = 0.2;
  EXPECT_NE(config_hash(noisier), h);
  auto longer = cfg;
  longer.stages = 81;
  EXPECT_NE(config_hash(longer), h);
  auto other_task = cfg;
  other_task.task = TaskId::T7;
  EXPECT_NE(config_hash(other_task), h);
}

TEST(EffectRecoveryTest, NoiseFreeDroneShiftIsExact) {
  TaskConfig cfg;
  cfg.task = TaskId::T3;
  cfg.objects = 4;
  cfg.body_objects = 1;
  cfg.signals = 1;
  cfg.stages = 40;
  cfg.seed = 3;
  auto data = simulate_round(cfg);
  const auto& entry = data.scenario.truth.effects.entries.front();
  auto tests = analyze_round(data.observed, data.allocation, cfg.seed, Fast());
  auto report = decide_body(tests, data.scenario.size(), 0.05, Correction::Bonferroni);
  auto effects = summarize_effects(report);
  ASSERT_EQ(effects.size(), 3u);
  for (const auto& e : effects) {
    EXPECT_EQ(e.object, entry.object);
    EXPECT_NEAR(e.xi_hat, entry.shift[static_cast<std::size_t>(e.column)], 1e-9);
  }
}

TEST(EffectRecoveryTest, EnvironmentNoiseAveragesOut) {
  TaskConfig cfg;
  cfg.task = TaskId::T3;
  cfg.objects = 4;
  cfg.body_objects = 1;
  cfg.signals = 1;
  cfg.stages = 200;
  cfg.noise.n1 = 0.5;
  double err = 0.0;
  int n = 0;
  for (int round = 0; round < 10; ++round) {
    cfg.seed = round_seed(7, cfg.task, round);
    auto data = simulate_round(cfg);
    const auto& entry = data.scenario.truth.effects.entries.front();
    auto panel = DeltaPanel::from_snapshots(data.observed);
    for (std::size_t c = 0; c < 3; ++c) {
      err += diff_in_means(panel.series(static_cast<std::size_t>(entry.object), c), data.allocation, 1) - entry.shift[c];
      ++n;
    }
  }
  EXPECT_LT(std::abs(err / n), 0.5);
}

TEST(SuiteTest, RowCountsAndHeader) {
  auto base = Small(TaskId::T0);
  auto suite = run_suite(base, parse_task_list("T0-T8"), 1, all_methods(), 3, Fast());
  EXPECT_EQ(suite.rows.size(), 45u);
  auto csv = suite.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "task,method,rounds,accuracy,recall,precision,specificity,f1,ap");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 46);
  EXPECT_TRUE(suite.failures.empty());
}

TEST(SuiteTest, MirrorSuiteShape) {
  auto suite = run_suite(Small(TaskId::T9), parse_task_list("mirror"), 1, parse_method_list("frt"), 3, Fast());
  ASSERT_EQ(suite.rows.size(), 12u);
  EXPECT_EQ(suite.rows.front().task, TaskId::T9);
  EXPECT_EQ(suite.rows.back().task, TaskId::T12);
  EXPECT_EQ(suite.rows.back().method, Method::FrtBonferroni);
}

TEST(SuiteTest, SingleRoundEqualsThatRound) {
  auto base = Small(TaskId::T2);
  auto suite = run_suite(base, {TaskId::T6}, 1, {Method::Frt01}, 44, Fast());
  auto cfg = base;
  cfg.task = TaskId::T6;
  cfg.seed = round_seed(44, TaskId::T6, 0);
  auto round = run_round(cfg, Method::Frt01, Fast());
  for (std::size_t i = 0; i < MetricSet::kCount; ++i) EXPECT_EQ(suite.rows[0].average.mean.get(i), round.metrics.get(i));
}

TEST(SuiteTest, WorkerCountDoesNotChangeCsv) {
  auto base = Small(TaskId::T0);
  auto tasks = parse_task_list("T2,T4,T8,T10");
  auto o1 = Fast();
  auto o3 = Fast();
  o3.workers = 3;
  EXPECT_EQ(run_suite(base, tasks, 3, all_methods(), 9, o1).csv(), run_suite(base, tasks, 3, all_methods(), 9, o3).csv());
}

TEST(SuiteTest, RejectsBadInput) {
  EXPECT_THROW(run_suite(Small(TaskId::T0), {TaskId::T0}, 0, all_methods(), 1, Fast()), ConfigError);
  auto bad = Small(TaskId::T0);
  bad.stages = 2;
  EXPECT_THROW(run_suite(bad, {TaskId::T0}, 1, all_methods(), 1, Fast()), ConfigError);
}

TEST(SweepTest, CsvShapeAndValidation) {
  SweepSpec spec;
  spec.base = Small(TaskId::T8);
  spec.param = SweepParam::N4;
  spec.values = {0.0, 0.5};
  spec.rounds = 2;
  spec.methods = {Method::Frt05, Method::FrtBonferroni};
  auto result = run_sweep(spec, Fast());
  auto csv = result.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "task,method,param,value,rounds,accuracy,recall,precision,specificity,f1,ap");
  EXPECT_EQ(result.rows.size(), 4u);
  EXPECT_NE(csv.find("T8,frt-0.05,n4,0.5,2,"), std::string::npos);

  spec.values = {0.5, 0.0, 0.2};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.values = {};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.param = SweepParam::Q;
  spec.values = {1.5};
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_EQ(sweep_param_from_string("T"), SweepParam::T);
  EXPECT_THROW(sweep_param_from_string("n5"), ConfigError);
}

TEST(SweepTest, WithParamRebalancesCounts) {
  auto cfg = Small(TaskId::T8);
  cfg.counts = {20, 20, 20, 20};
  auto t = with_param(cfg, SweepParam::T, 100);
  EXPECT_TRUE(t.counts.empty());
  EXPECT_EQ(t.resolved_counts(), (std::vector<int>{25, 25, 25, 25}));
  EXPECT_EQ(with_param(cfg, SweepParam::N2, 0.7).noise.n2, 0.7);
}

TEST(TraceTest, ReplayReproducesTheRound) {
  auto dir = std::filesystem::temp_directory_path() / "bodydisc_trace_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "trace.jsonl").string();
  auto cfg = Small(TaskId::T11, 21);
  auto live = run_round(cfg, Method::Frt05, Fast(), path);

  std::ifstream in(path);
  auto trace = read_trace(in);
  EXPECT_EQ(trace.config, cfg);
  EXPECT_EQ(trace.observed.size(), static_cast<std::size_t>(cfg.stages) + 1);
  auto replayed = replay(trace, Method::Frt05, Fast());
  EXPECT_EQ(replayed.report.at("predicted_body"), live.report.at("predicted_body"));
  EXPECT_EQ(replayed.report.at("tests"), live.report.at("tests"));
  for (std::size_t i = 0; i < MetricSet::kCount; ++i) EXPECT_EQ(replayed.metrics.get(i), live.metrics.get(i));
  std::filesystem::remove_all(dir);
}

TEST(TraceTest, RejectsBrokenTraces) {
  std::istringstream empty("");
  EXPECT_THROW(read_trace(empty), StructuralError);
  std::istringstream garbage("{\"nope\": 1}\n");
  EXPECT_THROW(read_trace(garbage), StructuralError);

  auto data = simulate_round(Small(TaskId::T2));
  std::ostringstream out;
  write_trace(data, out);
  // Drop the stage-3 record.
  std::istringstream full(out.str());
  std::string line;
  std::string broken;
  for (int i = 0; std::getline(full, line); ++i) {
    if (i != 4) broken += line + "\n";
  }
  std::istringstream gap(broken);
  EXPECT_THROW(read_trace(gap), StructuralError);
}

TEST(TraceTest, InferenceSeesOnlyObservedData) {
  // Same observations and allocation, different hidden truth: identical tests.
  auto data = simulate_round(Small(TaskId::T3, 8));
  auto tests = analyze_round(data.observed, data.allocation, 8, Fast());
  data.scenario.truth.body_set.clear();
  data.scenario.truth.effects.entries.clear();
  auto again = analyze_round(data.observed, data.allocation, 8, Fast());
  ASSERT_EQ(tests.size(), again.size());
  for (std::size_t i = 0; i < tests.size(); ++i) EXPECT_EQ(tests[i].p_value, again[i].p_value);
}

TEST(ConfigFileTest, DefaultsFileParses) {
  auto cfg = load_run_config(std::string(BODYDISC_SOURCE_DIR) + "/configs/suite_defaults.json");
  EXPECT_EQ(cfg.task.objects, 50);
  EXPECT_EQ(cfg.task.noise, default_noise());
  EXPECT_EQ(cfg.methods.size(), 5u);
  EXPECT_EQ(cfg.tasks.size(), 9u);
  ASSERT_TRUE(cfg.seed.has_value());
  auto again = run_config_from_json(to_json(cfg));
  EXPECT_EQ(again.task, cfg.task);
  EXPECT_EQ(again.methods, cfg.methods);
}

TEST(ConfigFileTest, BadFilesAreConfigErrors) {
  EXPECT_THROW(load_run_config("/nonexistent/cfg.json"), ConfigError);
  EXPECT_THROW(run_config_from_json({{"version", 2}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"run", {{"methods", "frt-0.2"}}}}), ConfigError);
}

TEST(ConfigFileTest, SeedPrecedence) {
  ::unsetenv("BODYDISC_SEED");
  EXPECT_EQ(resolve_seed(std::nullopt, std::nullopt), 0u);
  EXPECT_EQ(resolve_seed(std::nullopt, 5), 5u);
  ::setenv("BODYDISC_SEED", "77", 1);
  EXPECT_EQ(resolve_seed(std::nullopt, 5), 77u);
  EXPECT_EQ(resolve_seed(3, 5), 3u);
  ::setenv("BODYDISC_SEED", "x7", 1);
  EXPECT_THROW(resolve_seed(std::nullopt, 5), ConfigError);
  ::unsetenv("BODYDISC_SEED");
}

}  // namespace
}  // namespace bodydisc
