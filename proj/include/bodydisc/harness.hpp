// End-to-end body discovery rounds, multi-task suites and parameter sweeps.
#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bodydisc/core_model.hpp"
#include "bodydisc/evaluation.hpp"
#include "bodydisc/inference.hpp"
#include "bodydisc/scenario.hpp"

namespace bodydisc {

enum class Method { Frt05, Frt01, FrtBonferroni, Baseline05, Baseline01 };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
/// "all", "frt", "baseline", or a comma list of method names.
std::vector<Method> parse_method_list(const std::string& spec);
const std::vector<Method>& all_methods();
bool is_baseline(Method m);

/// Noise used when a run does not say otherwise.
NoiseConfig default_noise();
/// Defaults for a task: N=50, Q=5, T=200, balanced counts, default noise.
TaskConfig default_task_config(TaskId task);

struct RunOptions {
  int mc_samples = 1000;
  double alpha = 0.05;  // family-wise level for frt-bonferroni
  std::uint64_t exact_cap = kDefaultEnumerationCap;
  int workers = 1;
};

/// Why a round was aborted.
enum class FailureCause { Config, Structural, Internal };

class RoundError : public std::runtime_error {
 public:
  RoundError(FailureCause cause, const std::string& what) : std::runtime_error(what), cause_(cause) {}
  FailureCause cause() const { return cause_; }

 private:
  FailureCause cause_;
};

std::string to_string(FailureCause c);

/// Raw output of the simulator for one round. Inference only ever reads
/// `allocation` and `observed`.
struct RoundData {
  Scenario scenario;
  ActionSequence allocation;
  std::vector<WorldSnapshot> states;    // true S_0..S_T
  std::vector<WorldSnapshot> observed;  // sensed S_0..S_T
};

/// Generates the scenario, draws the allocation and runs T stages. Pure
/// function of cfg (including cfg.seed).
RoundData simulate_round(const TaskConfig& cfg);

/// All (object, feature, signal) randomization tests for one round.
std::vector<TestEntry> analyze_round(const std::vector<WorldSnapshot>& observed, const ActionSequence& allocation,
                                     std::uint64_t seed, const RunOptions& options);

struct Decision {
  std::vector<int> predicted;
  std::vector<double> scores;  // per object, lower = more body-like
  nlohmann::json report;
  bool degenerate = false;  // baseline with zero pooled variance
};

Decision decide(const std::vector<TestEntry>& tests, std::size_t objects, Method method, const RunOptions& options);

MetricSet score(const Decision& decision, const std::vector<int>& truth, std::size_t objects);

struct RoundResult {
  std::string config_hash;
  std::uint64_t seed = 0;
  Method method = Method::FrtBonferroni;
  nlohmann::json report;
  MetricSet metrics;
  std::chrono::duration<double> wall_clock{0.0};
  std::optional<std::string> trace_path;

  /// Canonical bytes; excludes wall-clock time.
  std::string serialize() const;
};

/// Stable hash of every field of cfg except the seed.
std::string config_hash(const TaskConfig& cfg);

RoundResult run_round(const TaskConfig& cfg, Method method, const RunOptions& options,
                      const std::optional<std::string>& trace_path = std::nullopt);

/// Per-round seed derived from the master seed, task and round index.
std::uint64_t round_seed(std::uint64_t master, TaskId task, int round);

struct SuiteRow {
  TaskId task = TaskId::T0;
  Method method = Method::FrtBonferroni;
  MetricAverage average;
  std::size_t failed_rounds = 0;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;  // sorted by task, then method order
  std::vector<std::string> failures;

  std::string csv() const;
  std::string table() const;
};

/// `base` supplies everything but the task id and seed.
SuiteResult run_suite(const TaskConfig& base, const std::vector<TaskId>& tasks, int rounds,
                      const std::vector<Method>& methods, std::uint64_t master_seed, const RunOptions& options);

enum class SweepParam { Q, N, T, N1, N2, N3, N4 };

std::string to_string(SweepParam p);
SweepParam sweep_param_from_string(const std::string& name);
/// Copy of cfg with the swept parameter set to `value` (counts rebalanced).
TaskConfig with_param(TaskConfig cfg, SweepParam param, double value);

struct SweepSpec {
  TaskConfig base;
  SweepParam param = SweepParam::T;
  std::vector<double> values;
  int rounds = 10;
  std::vector<Method> methods{Method::FrtBonferroni};
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct SweepRow {
  double value = 0.0;
  Method method = Method::FrtBonferroni;
  MetricAverage average;
  std::size_t failed_rounds = 0;
};

struct SweepResult {
  TaskId task = TaskId::T8;
  SweepParam param = SweepParam::T;
  std::vector<SweepRow> rows;

  std::string csv() const;
  /// Mean of a metric for (value, method); nullopt if absent or N/A.
  std::optional<double> metric(double value, Method method, std::size_t metric_index) const;
};

SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options);

/// JSON lines: a header record, then {t, action, true, observed} per stage.
void write_trace(const RoundData& data, std::ostream& out);

struct Trace {
  TaskConfig config;
  LayoutPtr layout;
  ActionSequence allocation;
  std::vector<WorldSnapshot> observed;
  std::optional<std::vector<int>> body;
};

Trace read_trace(std::istream& in);

/// Re-runs inference (and scoring, when the trace carries ground truth).
RoundResult replay(const Trace& trace, Method method, const RunOptions& options);

}  // namespace bodydisc
