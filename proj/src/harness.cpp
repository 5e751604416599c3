#include "bodydisc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "bodydisc/design.hpp"
#include "bodydisc/parallel.hpp"
#include "bodydisc/rng.hpp"
#include "bodydisc/sim.hpp"

namespace bodydisc {

namespace {

struct MethodInfo {
  Method method;
  const char* name;
};

constexpr MethodInfo kMethods[] = {
    {Method::Frt05, "frt-0.05"},          {Method::Frt01, "frt-0.01"},
    {Method::FrtBonferroni, "frt-bonferroni"}, {Method::Baseline05, "baseline-0.05"},
    {Method::Baseline01, "baseline-0.01"},
};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

FailureCause classify(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const RoundError& err) {
    return err.cause();
  } catch (const ConfigError&) {
    return FailureCause::Config;
  } catch (const StructuralError&) {
    return FailureCause::Structural;
  } catch (...) {
    return FailureCause::Internal;
  }
}

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& err) {
    return err.what();
  } catch (...) {
    return "unknown error";
  }
}

// One simulated and tested round, decided under each requested method.
struct RoundOutcome {
  std::vector<MetricSet> metrics;  // one per method
  bool ok = false;
  std::string failure;
};

RoundOutcome evaluate_round(const TaskConfig& cfg, const std::vector<Method>& methods, const RunOptions& options) {
  RoundOutcome out;
  try {
    auto data = simulate_round(cfg);
    RunOptions inner = options;
    inner.workers = 1;
    auto tests = analyze_round(data.observed, data.allocation, cfg.seed, inner);
    for (auto m : methods) {
      auto d = decide(tests, data.scenario.size(), m, options);
      out.metrics.push_back(score(d, data.scenario.truth.body_set, data.scenario.size()));
    }
    out.ok = true;
  } catch (...) {
    auto e = std::current_exception();
    out.failure = fmt::format("{}: {}", to_string(classify(e)), describe(e));
  }
  return out;
}

std::string metric_columns(const MetricAverage& avg) {
  std::string s;
  for (std::size_t i = 0; i < MetricSet::kCount; ++i) s += "," + format_metric(avg.mean.get(i));
  return s;
}

std::string format_value(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return fmt::format("{}", static_cast<long long>(v));
  return fmt::format("{}", v);
}

nlohmann::json metrics_json(const MetricSet& m) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < MetricSet::kCount; ++i) {
    auto v = m.get(i);
    j[MetricSet::name(i)] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  return j;
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& info : kMethods) {
    if (info.method == m) return info.name;
  }
  throw ConfigError("unknown method");
}

Method method_from_string(const std::string& name) {
  for (const auto& info : kMethods) {
    if (name == info.name) return info.method;
  }
  throw ConfigError(fmt::format("unknown method '{}'", name));
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> v;
    for (const auto& info : kMethods) v.push_back(info.method);
    return v;
  }();
  return methods;
}

bool is_baseline(Method m) { return m == Method::Baseline05 || m == Method::Baseline01; }

std::vector<Method> parse_method_list(const std::string& spec) {
  if (spec == "all") return all_methods();
  if (spec == "frt") return {Method::Frt05, Method::Frt01, Method::FrtBonferroni};
  if (spec == "baseline") return {Method::Baseline05, Method::Baseline01};
  std::vector<Method> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto m = method_from_string(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ConfigError("empty method list");
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_string(FailureCause c) {
  switch (c) {
    case FailureCause::Config: return "config";
    case FailureCause::Structural: return "structural";
    case FailureCause::Internal: return "internal";
  }
  return "internal";
}

NoiseConfig default_noise() {
  NoiseConfig n;
  n.n1 = 0.3;
  n.n2 = 0.5;
  n.n2_pattern = OtherAgentPattern::Random;
  n.n3 = 0.05;
  n.n4 = 0.1;
  return n;
}

TaskConfig default_task_config(TaskId task) {
  TaskConfig cfg;
  cfg.task = task;
  cfg.noise = default_noise();
  return cfg;
}

RoundData simulate_round(const TaskConfig& cfg) {
  cfg.validate();
  RoundData data{generate_task(cfg), {}, {}, {}};
  const auto& scenario = data.scenario;
  auto counts = cfg.resolved_counts();
  auto alloc_rng = make_rng(cfg.seed, {tag(Stream::Allocation)});
  data.allocation = randomize_allocation(counts, alloc_rng);

  auto streams = NoiseStreams::from_seed(cfg.seed);
  const double span = sensing_span(scenario);
  data.states.reserve(static_cast<std::size_t>(cfg.stages) + 1);
  data.observed.reserve(static_cast<std::size_t>(cfg.stages) + 1);
  data.states.push_back(scenario.initial);
  data.observed.push_back(sense(scenario.initial, cfg.noise.n4, span, streams.sensing));
  for (std::size_t t = 0; t < data.allocation.size(); ++t) {
    data.states.push_back(step(data.states.back(), data.allocation[t], scenario, cfg.noise, streams));
    data.observed.push_back(sense(data.states.back(), cfg.noise.n4, span, streams.sensing));
  }
  return data;
}

std::vector<TestEntry> analyze_round(const std::vector<WorldSnapshot>& observed, const ActionSequence& allocation,
                                     std::uint64_t seed, const RunOptions& options) {
  auto panel = DeltaPanel::from_snapshots(observed);
  EngineOptions engine;
  engine.frt.mc_samples = options.mc_samples;
  engine.frt.exact_cap = options.exact_cap;
  engine.seed = derive_seed(seed, {tag(Stream::Inference)});
  engine.workers = options.workers;
  return run_tests(panel, allocation, engine);
}

Decision decide(const std::vector<TestEntry>& tests, std::size_t objects, Method method, const RunOptions& options) {
  Decision d;
  if (is_baseline(method)) {
    std::vector<EffectEstimate> estimates;
    estimates.reserve(tests.size());
    for (const auto& t : tests) estimates.push_back({t.object, t.column, t.signal, t.xi_hat});
    auto report = baseline_decide(estimates, objects, method == Method::Baseline05 ? 0.05 : 0.01);
    d.predicted = report.predicted_body();
    d.scores = report.object_scores();
    d.degenerate = report.degenerate;
    d.report = report.to_json();
  } else {
    double alpha = options.alpha;
    auto correction = Correction::Bonferroni;
    if (method == Method::Frt05) alpha = 0.05, correction = Correction::None;
    if (method == Method::Frt01) alpha = 0.01, correction = Correction::None;
    auto report = decide_body(tests, objects, alpha, correction, options.mc_samples);
    d.predicted = report.predicted_body();
    d.scores = report.object_scores();
    d.report = report.to_json();
    nlohmann::json effects = nlohmann::json::array();
    for (const auto& e : summarize_effects(report)) {
      effects.push_back({{"object", e.object}, {"column", e.column}, {"signal", e.signal}, {"xi_hat", e.xi_hat},
                         {"p_value", e.p_value}});
    }
    d.report["effects"] = std::move(effects);
  }
  d.report["method"] = to_string(method);
  return d;
}

MetricSet score(const Decision& decision, const std::vector<int>& truth, std::size_t objects) {
  auto m = metrics(confusion(decision.predicted, truth, objects));
  m.average_precision = average_precision(decision.scores, truth);
  return m;
}

std::string RoundResult::serialize() const {
  nlohmann::json j = {{"config_hash", config_hash},
                      {"seed", seed},
                      {"method", to_string(method)},
                      {"metrics", metrics_json(metrics)},
                      {"report", report}};
  if (trace_path) j["trace"] = *trace_path;
  return j.dump();
}

std::string config_hash(const TaskConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("seed");
  return fmt::format("{:016x}", fnv1a(j.dump()));
}

RoundResult run_round(const TaskConfig& cfg, Method method, const RunOptions& options,
                      const std::optional<std::string>& trace_path) {
  const auto start = std::chrono::steady_clock::now();
  RoundResult result;
  result.config_hash = config_hash(cfg);
  result.seed = cfg.seed;
  result.method = method;
  result.trace_path = trace_path;

  auto data = simulate_round(cfg);
  if (trace_path) {
    std::ofstream out(*trace_path);
    if (!out) throw ConfigError(fmt::format("cannot write trace '{}'", *trace_path));
    write_trace(data, out);
  }
  auto tests = analyze_round(data.observed, data.allocation, cfg.seed, options);
  auto d = decide(tests, data.scenario.size(), method, options);
  if (d.degenerate) fmt::print(stderr, "warning: baseline variance is zero; nothing flagged\n");
  result.metrics = score(d, data.scenario.truth.body_set, data.scenario.size());
  result.report = std::move(d.report);
  result.report["true_body"] = data.scenario.truth.body_set;
  result.wall_clock = std::chrono::steady_clock::now() - start;
  return result;
}

std::uint64_t round_seed(std::uint64_t master, TaskId task, int round) {
  return derive_seed(master, {static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(round)});
}

SuiteResult run_suite(const TaskConfig& base, const std::vector<TaskId>& tasks, int rounds,
                      const std::vector<Method>& methods, std::uint64_t master_seed, const RunOptions& options) {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (tasks.empty()) throw ConfigError("no tasks given");
  if (methods.empty()) throw ConfigError("no methods given");
  for (auto task : tasks) {
    auto cfg = base;
    cfg.task = task;
    cfg.validate();
  }

  const auto per_task = static_cast<std::size_t>(rounds);
  std::vector<RoundOutcome> outcomes(tasks.size() * per_task);
  parallel_for(outcomes.size(), options.workers, [&](std::size_t i) {
    auto cfg = base;
    cfg.task = tasks[i / per_task];
    cfg.seed = round_seed(master_seed, cfg.task, static_cast<int>(i % per_task));
    outcomes[i] = evaluate_round(cfg, methods, options);
  });

  SuiteResult result;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    for (std::size_t r = 0; r < per_task; ++r) {
      const auto& o = outcomes[k * per_task + r];
      if (!o.ok) result.failures.push_back(fmt::format("{} round {}: {}", to_string(tasks[k]), r, o.failure));
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::vector<MetricSet> sets;
      std::size_t failed = 0;
      for (std::size_t r = 0; r < per_task; ++r) {
        const auto& o = outcomes[k * per_task + r];
        if (o.ok) {
          sets.push_back(o.metrics[m]);
        } else {
          ++failed;
        }
      }
      result.rows.push_back({tasks[k], methods[m], average(sets), failed});
    }
  }
  return result;
}

std::string SuiteResult::csv() const {
  std::string s = "task,method,rounds,accuracy,recall,precision,specificity,f1,ap\n";
  for (const auto& row : rows) {
    s += fmt::format("{},{},{}{}\n", to_string(row.task), to_string(row.method), row.average.rounds,
                     metric_columns(row.average));
  }
  return s;
}

std::string SuiteResult::table() const {
  std::string s = fmt::format("{:<5} {:<15} {:>6}", "task", "method", "rounds");
  for (std::size_t i = 0; i < MetricSet::kCount; ++i) s += fmt::format(" {:>11}", MetricSet::name(i));
  s += "  failed\n";
  for (const auto& row : rows) {
    s += fmt::format("{:<5} {:<15} {:>6}", to_string(row.task), to_string(row.method), row.average.rounds);
    for (std::size_t i = 0; i < MetricSet::kCount; ++i) {
      auto cell = format_metric(row.average.mean.get(i), 3);
      if (row.average.excluded[i] > 0) cell += fmt::format("({})", row.average.excluded[i]);
      s += fmt::format(" {:>11}", cell);
    }
    s += fmt::format("  {}\n", row.failed_rounds);
  }
  s += "(k) after a value: rounds where that metric was N/A and left out of the mean\n";
  return s;
}

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Q: return "Q";
    case SweepParam::N: return "N";
    case SweepParam::T: return "T";
    case SweepParam::N1: return "n1";
    case SweepParam::N2: return "n2";
    case SweepParam::N3: return "n3";
    case SweepParam::N4: return "n4";
  }
  return "T";
}

SweepParam sweep_param_from_string(const std::string& name) {
  for (auto p : {SweepParam::Q, SweepParam::N, SweepParam::T, SweepParam::N1, SweepParam::N2, SweepParam::N3,
                 SweepParam::N4}) {
    if (name == to_string(p)) return p;
  }
  throw ConfigError(fmt::format("unknown sweep parameter '{}' (expected Q, N, T, n1, n2, n3 or n4)", name));
}

TaskConfig with_param(TaskConfig cfg, SweepParam param, double value) {
  auto as_int = [&] {
    if (value != std::floor(value)) throw ConfigError(fmt::format("{} must be an integer, got {}", to_string(param), value));
    return static_cast<int>(value);
  };
  switch (param) {
    case SweepParam::Q: cfg.signals = as_int(), cfg.counts.clear(); break;
    case SweepParam::N: cfg.objects = as_int(); break;
    case SweepParam::T: cfg.stages = as_int(), cfg.counts.clear(); break;
    case SweepParam::N1: cfg.noise.n1 = value; break;
    case SweepParam::N2: cfg.noise.n2 = value; break;
    case SweepParam::N3: cfg.noise.n3 = value; break;
    case SweepParam::N4: cfg.noise.n4 = value; break;
  }
  return cfg;
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (methods.empty()) throw ConfigError("no methods given");
  const bool up = std::is_sorted(values.begin(), values.end(), std::less<>());
  const bool down = std::is_sorted(values.begin(), values.end(), std::greater<>());
  if (!up && !down) throw ConfigError("sweep values must be monotone");
  if (std::adjacent_find(values.begin(), values.end()) != values.end()) throw ConfigError("sweep values repeat");
  for (double v : values) with_param(base, param, v).validate();
}

SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options) {
  spec.validate();
  const auto per_value = static_cast<std::size_t>(spec.rounds);
  std::vector<RoundOutcome> outcomes(spec.values.size() * per_value);
  // Round r uses the same seed at every value, so points differ only in the swept parameter.
  parallel_for(outcomes.size(), options.workers, [&](std::size_t i) {
    auto cfg = with_param(spec.base, spec.param, spec.values[i / per_value]);
    cfg.seed = round_seed(spec.master_seed, cfg.task, static_cast<int>(i % per_value));
    outcomes[i] = evaluate_round(cfg, spec.methods, options);
  });

  SweepResult result;
  result.task = spec.base.task;
  result.param = spec.param;
  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      std::vector<MetricSet> sets;
      std::size_t failed = 0;
      for (std::size_t r = 0; r < per_value; ++r) {
        const auto& o = outcomes[v * per_value + r];
        if (o.ok) {
          sets.push_back(o.metrics[m]);
        } else {
          ++failed;
        }
      }
      result.rows.push_back({spec.values[v], spec.methods[m], average(sets), failed});
    }
  }
  return result;
}

std::string SweepResult::csv() const {
  std::string s = "task,method,param,value,rounds,accuracy,recall,precision,specificity,f1,ap\n";
  for (const auto& row : rows) {
    s += fmt::format("{},{},{},{},{}{}\n", to_string(task), to_string(row.method), to_string(param),
                     format_value(row.value), row.average.rounds, metric_columns(row.average));
  }
  return s;
}

std::optional<double> SweepResult::metric(double value, Method method, std::size_t metric_index) const {
  for (const auto& row : rows) {
    if (row.value == value && row.method == method) return row.average.mean.get(metric_index);
  }
  return std::nullopt;
}

void write_trace(const RoundData& data, std::ostream& out) {
  nlohmann::json header = {{"config", to_json(data.scenario.config)},
                           {"layout", data.scenario.layout->to_json()},
                           {"signals", data.allocation.signals()},
                           {"body", data.scenario.truth.body_set}};
  out << nlohmann::json{{"header", header}}.dump() << '\n';
  for (std::size_t t = 0; t < data.states.size(); ++t) {
    nlohmann::json rec = {{"t", t},
                          {"action", t == 0 ? nlohmann::json(nullptr) : nlohmann::json(data.allocation[t - 1])},
                          {"true", data.states[t].to_json()},
                          {"observed", data.observed[t].to_json()}};
    out << rec.dump() << '\n';
  }
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw StructuralError("trace is empty");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line).at("header");
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(fmt::format("bad trace header: {}", e.what()));
  }
  Trace trace;
  trace.config = task_config_from_json(header.at("config"));
  trace.layout = std::make_shared<const FeatureLayout>(FeatureLayout::from_json(header.at("layout")));
  if (header.contains("body")) trace.body = header.at("body").get<std::vector<int>>();
  const int signals = header.at("signals").get<int>();

  std::vector<int> actions;
  int expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto rec = nlohmann::json::parse(line);
      if (rec.at("t").get<int>() != expected) {
        throw StructuralError(fmt::format("trace record {} out of order (expected {})", rec.at("t").get<int>(), expected));
      }
      if (expected > 0) actions.push_back(rec.at("action").get<int>());
      trace.observed.push_back(WorldSnapshot::from_json(rec.at("observed"), trace.layout));
      ++expected;
    } catch (const nlohmann::json::exception& e) {
      throw StructuralError(fmt::format("bad trace record {}: {}", expected, e.what()));
    }
  }
  if (trace.observed.size() < 2) throw StructuralError("trace holds fewer than two stages");
  trace.allocation = ActionSequence(std::move(actions), signals);
  return trace;
}

RoundResult replay(const Trace& trace, Method method, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RoundResult result;
  result.config_hash = config_hash(trace.config);
  result.seed = trace.config.seed;
  result.method = method;
  auto tests = analyze_round(trace.observed, trace.allocation, trace.config.seed, options);
  const auto objects = trace.layout->objects();
  auto d = decide(tests, objects, method, options);
  if (d.degenerate) fmt::print(stderr, "warning: baseline variance is zero; nothing flagged\n");
  if (trace.body) {
    result.metrics = score(d, *trace.body, objects);
    d.report["true_body"] = *trace.body;
  }
  result.report = std::move(d.report);
  result.wall_clock = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace bodydisc
