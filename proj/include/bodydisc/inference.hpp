// Difference-in-means estimation, the Fisher randomization test over
// constrained permutations, multiple-testing decisions, and the pooled
// normal-interval baseline.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bodydisc/core_model.hpp"
#include "bodydisc/design.hpp"
#include "bodydisc/rng.hpp"

namespace bodydisc {

/// Delta series per (object, column), stages 1..T.
class DeltaPanel {
 public:
  DeltaPanel(LayoutPtr layout, std::size_t stages);
  /// Builds the panel from observed snapshots S_0..S_T.
  static DeltaPanel from_snapshots(const std::vector<WorldSnapshot>& snapshots);

  const LayoutPtr& layout() const { return layout_; }
  std::size_t stages() const { return stages_; }
  std::span<const double> series(std::size_t object, std::size_t column) const;
  std::span<double> series(std::size_t object, std::size_t column);

 private:
  LayoutPtr layout_;
  std::size_t stages_;
  std::vector<double> data_;
};

struct EffectEstimate {
  int object = 0;
  int column = 0;
  int signal = 0;
  double xi_hat = 0.0;
};

/// Mean delta under action q minus mean delta under action 0.
double diff_in_means(std::span<const double> deltas, const ActionSequence& allocation, int q);

/// Full science table for one (object, feature): Delta_t(q) and Delta_t(0).
/// Only available in simulation.
struct PotentialOutcomes {
  std::vector<double> treated;
  std::vector<double> control;
};

struct VarianceComponents {
  double s_q_sq = 0.0;
  double s_0_sq = 0.0;
  double s_tau_q_sq = 0.0;
  double var_xi = 0.0;
};

/// Finite-population average effect (1/T) sum_t (Delta_t(q) - Delta_t(0)).
double oracle_true_effect(const PotentialOutcomes& po);
/// Randomization variance of the difference-in-means estimator, with
/// (T-1)^-1 normalized, mean-centred components.
VarianceComponents oracle_variance(const PotentialOutcomes& po, int n_q, int n_0);

struct FrtOptions {
  int mc_samples = 1000;
  std::uint64_t exact_cap = kDefaultEnumerationCap;
  bool allow_exact = true;
};

struct FrtResult {
  double xi_obs = 0.0;
  double p_value = 1.0;
  bool exact = false;
  std::uint64_t draws = 0;  // permutations evaluated
};

/// p = #{|xi(D*)| >= |xi_obs|} / #draws under the sharp null. Enumerates every
/// constrained permutation when their count is within `exact_cap`, otherwise
/// draws `mc_samples` of them with replacement.
FrtResult frt_p_value(std::span<const double> deltas, const ActionSequence& observed, int q, const FrtOptions& options,
                      Rng& rng);

enum class Correction { None, Bonferroni };

struct TestEntry {
  int object = 0;
  int column = 0;
  int signal = 0;
  double xi_hat = 0.0;
  double p_value = 1.0;
  bool exact = false;
  bool rejected = false;
};

struct TestReport {
  std::size_t objects = 0;
  double alpha = 0.05;
  Correction correction = Correction::None;
  double threshold = 0.05;
  int mc_samples = 0;
  std::vector<TestEntry> tests;
  std::vector<char> body_verdict;

  std::vector<int> predicted_body() const;
  /// Smallest p-value per object (1 for objects without tests).
  std::vector<double> object_scores() const;
  std::string mode() const;
  nlohmann::json to_json() const;
};

struct EngineOptions {
  FrtOptions frt;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Runs every (object, column, signal) test over the present cells. Each test
/// draws from its own stream seeded by (seed, object, column, signal).
std::vector<TestEntry> run_tests(const DeltaPanel& panel, const ActionSequence& allocation, const EngineOptions& options);

/// Rejects p <= alpha, or p <= alpha / #tests under Bonferroni. An object is
/// body iff any of its tests rejects.
TestReport decide_body(std::vector<TestEntry> tests, std::size_t objects, double alpha, Correction correction,
                       int mc_samples = 0);

struct BaselineReport {
  std::size_t objects = 0;
  double alpha = 0.05;
  double mean = 0.0;
  double variance = 0.0;
  double critical = 0.0;  // z_{1 - alpha/2}
  bool degenerate = false;
  std::vector<TestEntry> tests;  // rejected = flagged; p_value = two-sided normal tail of (xi - mean) / variance
  std::vector<char> body_verdict;

  std::vector<int> predicted_body() const;
  std::vector<double> object_scores() const;
  nlohmann::json to_json() const;
};

/// Flags estimates outside [mean - z V, mean + z V], V the pooled sample
/// variance of all estimates. A zero variance flags nothing.
BaselineReport baseline_decide(std::span<const EffectEstimate> estimates, std::size_t objects, double alpha);

struct EffectSummary {
  int object = 0;
  int column = 0;
  int signal = 0;
  double xi_hat = 0.0;
  double p_value = 1.0;
};

/// Estimated per-firing effect for each rejected test.
std::vector<EffectSummary> summarize_effects(const TestReport& report);

/// object,feature,signal,xi_hat,p_value,rejected
void write_effects_csv(const TestReport& report, std::ostream& out);

}  // namespace bodydisc
