// bodydisc: run body discovery rounds, suites, sweeps and trace replays.
//
//   bodydisc round --task T4 --method frt-bonferroni --seed 7 --out runs/r1
//   bodydisc suite --tasks T0-T8 --methods all --rounds 10 --out runs/suite
//   bodydisc sweep --task T8 --param n4 --values 0,0.2,0.4,0.6,0.8 --out runs/n4
//   bodydisc replay runs/r1/trace.jsonl --method frt-0.05

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "bodydisc/config_io.hpp"
#include "bodydisc/harness.hpp"

namespace fs = std::filesystem;
using namespace bodydisc;

namespace {

struct Flags {
  std::string config;
  std::string task;
  std::string tasks;
  std::string method;
  std::optional<double> alpha;
  std::optional<int> mc_samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<int> workers;
  std::string out;
  bool trace = false;
  std::optional<double> n1, n2, n3, n4;
  std::string n2_pattern;
  std::optional<int> objects, signals, stages;
  std::string param;
  std::string values;
  std::string trace_file;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON run configuration; flags override it");
  app->add_option("--alpha", f.alpha, "family-wise level for frt-bonferroni");
  app->add_option("--mc-samples", f.mc_samples, "Monte Carlo permutations per test");
  app->add_option("--seed", f.seed, "master seed (falls back to $BODYDISC_SEED)");
  app->add_option("--workers", f.workers, "worker threads");
  app->add_option("--out", f.out, "output directory");
}

void add_world(CLI::App* app, Flags& f) {
  app->add_option("--n1", f.n1, "environment noise intensity");
  app->add_option("--n2", f.n2, "other-agent noise intensity");
  app->add_option("--n2-pattern", f.n2_pattern, "random or periodic");
  app->add_option("--n3", f.n3, "action failure probability");
  app->add_option("--n4", f.n4, "sensing error intensity");
  app->add_option("--objects", f.objects, "number of objects N");
  app->add_option("--signals", f.signals, "number of signals Q");
  app->add_option("--stages", f.stages, "number of stages T");
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  auto& t = cfg.task;
  if (f.n1) t.noise.n1 = *f.n1;
  if (f.n2) t.noise.n2 = *f.n2;
  if (!f.n2_pattern.empty()) t.noise.n2_pattern = other_agent_pattern_from_string(f.n2_pattern);
  if (f.n3) t.noise.n3 = *f.n3;
  if (f.n4) t.noise.n4 = *f.n4;
  if (f.objects) t.objects = *f.objects;
  if (f.signals) t.signals = *f.signals, t.counts.clear();
  if (f.stages) t.stages = *f.stages, t.counts.clear();
  if (!f.task.empty()) t.task = task_from_string(f.task);
  if (!f.tasks.empty()) cfg.tasks = parse_task_list(f.tasks);
  if (!f.method.empty()) cfg.methods = parse_method_list(f.method);
  if (f.alpha) cfg.run.alpha = *f.alpha;
  if (f.mc_samples) cfg.run.mc_samples = *f.mc_samples;
  if (f.workers) cfg.run.workers = *f.workers;
  if (f.rounds) cfg.rounds = *f.rounds;
  if (!f.param.empty()) cfg.sweep_param = sweep_param_from_string(f.param);
  if (!f.values.empty()) {
    cfg.sweep_values.clear();
    std::stringstream ss(f.values);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        cfg.sweep_values.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("bad sweep value '{}'", item));
      }
    }
  }
  cfg.seed = resolve_seed(f.seed, cfg.seed);
  t.noise.validate();
  return cfg;
}

fs::path prepare_out(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  f << text;
}

void print_metrics(const MetricSet& m) {
  for (std::size_t i = 0; i < MetricSet::kCount; ++i) {
    fmt::print("  {:<12} {}\n", MetricSet::name(i), format_metric(m.get(i), 4));
  }
}

std::string effects_csv(const nlohmann::json& report) {
  std::string s = "object,feature,signal,xi_hat,p_value\n";
  if (!report.contains("effects")) return s;
  for (const auto& e : report.at("effects")) {
    s += fmt::format("{},{},{},{},{}\n", e.at("object").get<int>(), e.at("column").get<int>(),
                     e.at("signal").get<int>(), e.at("xi_hat").get<double>(), e.at("p_value").get<double>());
  }
  return s;
}

void report_round(const RoundResult& r, const fs::path& dir) {
  fmt::print("method {}  seed {}  config {}\n", to_string(r.method), r.seed, r.config_hash);
  fmt::print("predicted body: {}\n", r.report.at("predicted_body").dump());
  if (r.report.contains("true_body")) fmt::print("true body:      {}\n", r.report.at("true_body").dump());
  print_metrics(r.metrics);
  fmt::print("wall clock {:.3f} s\n", r.wall_clock.count());
  write_file(dir / "round.json", r.serialize() + "\n");
  write_file(dir / "effects.csv", effects_csv(r.report));
}

int cmd_round(const Flags& f) {
  auto cfg = resolve(f);
  auto task = cfg.task;
  task.seed = *cfg.seed;
  if (cfg.methods.size() != 1) throw ConfigError("round takes a single --method");
  auto dir = prepare_out(f.out);
  std::optional<std::string> trace;
  if (f.trace) trace = (dir / "trace.jsonl").string();
  report_round(run_round(task, cfg.methods.front(), cfg.run, trace), dir);
  return 0;
}

int cmd_suite(const Flags& f) {
  auto cfg = resolve(f);
  auto result = run_suite(cfg.task, cfg.tasks, cfg.rounds, cfg.methods, *cfg.seed, cfg.run);
  auto dir = prepare_out(f.out);
  write_file(dir / "suite.csv", result.csv());
  write_file(dir / "suite.txt", result.table());
  fmt::print("{}", result.table());
  for (const auto& failure : result.failures) fmt::print(stderr, "failed: {}\n", failure);
  return result.failures.empty() ? 0 : 4;
}

int cmd_sweep(const Flags& f) {
  auto cfg = resolve(f);
  if (!cfg.sweep_param) throw ConfigError("sweep needs --param");
  SweepSpec spec;
  spec.base = cfg.task;
  spec.param = *cfg.sweep_param;
  spec.values = cfg.sweep_values;
  spec.rounds = cfg.rounds;
  spec.methods = cfg.methods;
  spec.master_seed = *cfg.seed;
  auto result = run_sweep(spec, cfg.run);
  auto dir = prepare_out(f.out);
  auto csv = result.csv();
  write_file(dir / fmt::format("sweep_{}_{}.csv", to_string(spec.base.task), to_string(spec.param)), csv);
  fmt::print("{}", csv);
  return 0;
}

int cmd_replay(const Flags& f) {
  auto cfg = resolve(f);
  std::ifstream in(f.trace_file);
  if (!in) throw ConfigError(fmt::format("cannot open trace '{}'", f.trace_file));
  auto trace = read_trace(in);
  if (cfg.methods.size() != 1) throw ConfigError("replay takes a single --method");
  auto dir = prepare_out(f.out);
  auto result = replay(trace, cfg.methods.front(), cfg.run);
  result.trace_path = f.trace_file;
  report_round(result, dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Body discovery by randomized signal experiments"};
  app.require_subcommand(1);
  Flags f;

  auto* round = app.add_subcommand("round", "simulate, test and score one round");
  add_common(round, f);
  add_world(round, f);
  round->add_option("--task", f.task, "task id, T0..T12");
  round->add_option("--method", f.method, "frt-0.05, frt-0.01, frt-bonferroni, baseline-0.05 or baseline-0.01");
  round->add_flag("--trace", f.trace, "write trace.jsonl to the output directory");

  auto* suite = app.add_subcommand("suite", "average metrics over rounds for several tasks and methods");
  add_common(suite, f);
  add_world(suite, f);
  suite->add_option("--tasks,--task", f.tasks, "task list, e.g. T0-T8, mirror, all");
  suite->add_option("--methods,--method", f.method, "method list, or all / frt / baseline");
  suite->add_option("--rounds", f.rounds, "rounds per task");

  auto* sweep = app.add_subcommand("sweep", "average metrics along one parameter");
  add_common(sweep, f);
  add_world(sweep, f);
  sweep->add_option("--task", f.task, "task id");
  sweep->add_option("--methods,--method", f.method, "method list");
  sweep->add_option("--rounds", f.rounds, "rounds per value");
  sweep->add_option("--param", f.param, "Q, N, T, n1, n2, n3 or n4");
  sweep->add_option("--values", f.values, "comma-separated monotone values");

  auto* rep = app.add_subcommand("replay", "re-run inference on a recorded trace");
  add_common(rep, f);
  rep->add_option("trace", f.trace_file, "trace.jsonl")->required();
  rep->add_option("--method", f.method, "method");

  CLI11_PARSE(app, argc, argv);

  try {
    if (round->parsed()) return cmd_round(f);
    if (suite->parsed()) return cmd_suite(f);
    if (sweep->parsed()) return cmd_sweep(f);
    if (rep->parsed()) return cmd_replay(f);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const StructuralError& e) {
    fmt::print(stderr, "structural error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
