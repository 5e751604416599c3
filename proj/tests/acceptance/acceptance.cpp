// Acceptance checks P1-P10. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "bodydisc/design.hpp"
#include "bodydisc/harness.hpp"
#include "bodydisc/inference.hpp"
#include "bodydisc/sim.hpp"

using namespace bodydisc;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Science table shared by P1 and P2: T=6, n_0 = n_1 = 3.
const PotentialOutcomes kTable{{3.1, -0.4, 2.2, 5.0, 1.7, 0.3}, {1.0, 0.5, -1.2, 2.4, 0.0, 0.9}};

std::vector<double> estimates_over_all_allocations() {
  std::vector<double> xs;
  for (int mask = 0; mask < 64; ++mask) {
    if (__builtin_popcount(mask) != 3) continue;
    std::vector<int> d(6);
    std::vector<double> y(6);
    for (int t = 0; t < 6; ++t) {
      d[t] = (mask >> t) & 1;
      y[t] = d[t] ? kTable.treated[t] : kTable.control[t];
    }
    xs.push_back(diff_in_means(y, ActionSequence(d, 1), 1));
  }
  return xs;
}

double sample_variance(const std::vector<double>& v) {
  double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

Outcome p1() {
  auto xs = estimates_over_all_allocations();
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double truth = 0.0;
  for (int t = 0; t < 6; ++t) truth += (kTable.treated[t] - kTable.control[t]) / 6.0;
  double err = std::abs(mean - truth);
  return {xs.size() == 20 && err <= 1e-12, fmt::format("{} allocations, mean {:.15f}, xi {:.15f}, |diff| {:.2e}",
                                                       xs.size(), mean, truth, err)};
}

Outcome p2() {
  auto xs = estimates_over_all_allocations();
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double empirical = 0.0;
  for (double x : xs) empirical += (x - mean) * (x - mean) / static_cast<double>(xs.size());
  std::vector<double> tau(6);
  for (int t = 0; t < 6; ++t) tau[t] = kTable.treated[t] - kTable.control[t];
  double formula = sample_variance(kTable.treated) / 3 + sample_variance(kTable.control) / 3 - sample_variance(tau) / 6;
  double library = oracle_variance(kTable, 3, 3).var_xi;
  double err = std::max(std::abs(empirical - formula), std::abs(library - formula));
  return {err <= 1e-10, fmt::format("empirical {:.12f}, formula {:.12f}, library {:.12f}", empirical, formula, library)};
}

Outcome p3() {
  const double deltas[] = {1, 1, 0, 0};
  Rng rng(kSeed);
  auto r = frt_p_value(deltas, ActionSequence({1, 1, 0, 0}, 1), 1, {}, rng);
  return {r.exact && r.draws == 6 && r.p_value == 1.0 / 3.0,
          fmt::format("p = {:.17g} over {} {} permutations", r.p_value, r.draws, r.exact ? "enumerated" : "sampled")};
}

// Null rounds: three drones, no effects, N1 noise only.
Outcome p4() {
  const int rounds = 5000;
  const int mc = 1000;
  TaskConfig cfg;
  cfg.task = TaskId::T3;
  cfg.objects = 3;
  cfg.body_objects = 1;
  cfg.signals = 1;
  cfg.stages = 40;
  cfg.other_agent_fraction = 0.0;
  cfg.noise.n1 = 1.0;

  long tests = 0;
  long rejected = 0;
  int family_errors = 0;
  std::size_t family = 0;
  for (int r = 0; r < rounds; ++r) {
    cfg.seed = derive_seed(kSeed, {4, static_cast<std::uint64_t>(r)});
    auto sc = generate_task(cfg);
    sc.truth.body_set.clear();
    sc.truth.effects.entries.clear();
    auto alloc_rng = make_rng(cfg.seed, {tag(Stream::Allocation)});
    auto counts = cfg.resolved_counts();
    auto allocation = randomize_allocation(counts, alloc_rng);
    auto streams = NoiseStreams::from_seed(cfg.seed);
    std::vector<WorldSnapshot> states{sc.initial};
    for (std::size_t t = 0; t < allocation.size(); ++t) {
      states.push_back(step(states.back(), allocation[t], sc, cfg.noise, streams));
    }
    EngineOptions opts;
    opts.frt.mc_samples = mc;
    opts.seed = derive_seed(cfg.seed, {tag(Stream::Inference)});
    auto entries = run_tests(DeltaPanel::from_snapshots(states), allocation, opts);
    family = entries.size();
    bool any = false;
    for (const auto& e : entries) {
      ++tests;
      if (e.p_value <= 0.05) ++rejected;
      if (e.p_value <= 0.05 / static_cast<double>(entries.size())) any = true;
    }
    family_errors += any;
  }
  double rate = static_cast<double>(rejected) / static_cast<double>(tests);
  double fwer = static_cast<double>(family_errors) / rounds;
  return {rate >= 0.04 && rate <= 0.06 && fwer <= 0.06,
          fmt::format("{} rounds x {} tests, M={}: uncorrected rate {:.4f} (need [0.04, 0.06]), Bonferroni FWER {:.4f} "
                      "(need <= 0.06)",
                      rounds, family, mc, rate, fwer)};
}

Outcome p5() {
  auto all = enumerate_permutations(ActionSequence({0, 1, 2, 1}, 2), 1);
  std::set<std::vector<int>> got;
  for (const auto& a : all) got.insert(a.actions());
  std::set<std::vector<int>> expected{{0, 1, 2, 1}, {1, 0, 2, 1}, {1, 1, 2, 0}};
  std::string listed;
  for (const auto& a : all) listed += fmt::format(" ({},{},{},{})", a[0], a[1], a[2], a[3]);
  return {all.size() == 3 && got == expected, fmt::format("{} sequences:{}", all.size(), listed)};
}

Outcome p6() {
  const auto start = std::chrono::steady_clock::now();
  auto base = default_task_config(TaskId::T0);
  base.noise = NoiseConfig{};
  auto suite = run_suite(base, parse_task_list("T0-T8"), 10, {Method::FrtBonferroni}, kSeed, RunOptions{});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = suite.failures.empty() && seconds <= 300.0;
  std::string worst;
  double min_recall = 1.0;
  double min_spec = 1.0;
  for (const auto& row : suite.rows) {
    double rec = row.average.mean.recall.value_or(0.0);
    double spec = row.average.mean.specificity.value_or(0.0);
    ok = ok && rec >= 0.95 && spec >= 0.99;
    min_recall = std::min(min_recall, rec);
    min_spec = std::min(min_spec, spec);
  }
  return {ok, fmt::format("T0-T8 x 10 rounds: min recall {:.3f} (need 0.95), min specificity {:.3f} (need 0.99), "
                          "{:.1f} s (need <= 300)",
                          min_recall, min_spec, seconds)};
}

SweepResult sweep(SweepParam param, std::vector<double> values) {
  SweepSpec spec;
  spec.base = default_task_config(TaskId::T8);
  spec.param = param;
  spec.values = std::move(values);
  spec.rounds = 10;
  spec.methods = {Method::FrtBonferroni};
  spec.master_seed = kSeed;
  return run_sweep(spec, RunOptions{});
}

Outcome p7() {
  constexpr std::size_t kAccuracy = 0;
  constexpr std::size_t kF1 = 4;
  const std::vector<double> ts{50, 100, 200, 400};
  auto t_sweep = sweep(SweepParam::T, ts);
  std::vector<double> acc;
  for (double t : ts) acc.push_back(t_sweep.metric(t, Method::FrtBonferroni, kAccuracy).value_or(0.0));
  int inversions = 0;
  bool small = true;
  for (std::size_t i = 1; i < acc.size(); ++i) {
    if (acc[i] < acc[i - 1]) {
      ++inversions;
      small = small && acc[i - 1] - acc[i] <= 0.01;
    }
  }
  bool t_ok = inversions == 0 || (inversions == 1 && small);

  auto n4_sweep = sweep(SweepParam::N4, {0.0, 0.2, 0.4, 0.6, 0.8});
  double f1_04 = n4_sweep.metric(0.4, Method::FrtBonferroni, kF1).value_or(0.0);
  double f1_08 = n4_sweep.metric(0.8, Method::FrtBonferroni, kF1).value_or(0.0);
  bool n4_ok = f1_04 - f1_08 > 0.2;

  const std::vector<double> n2s{0.0, 0.5, 1.0};
  auto n2_sweep = sweep(SweepParam::N2, n2s);
  std::vector<double> f1;
  for (double v : n2s) f1.push_back(n2_sweep.metric(v, Method::FrtBonferroni, kF1).value_or(0.0));
  double worst_drop = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    for (std::size_t j = i + 1; j < f1.size(); ++j) worst_drop = std::max(worst_drop, f1[i] - f1[j]);
  }
  bool n2_ok = worst_drop <= 0.05;

  return {t_ok && n4_ok && n2_ok,
          fmt::format("accuracy over T {:.3f}/{:.3f}/{:.3f}/{:.3f} ({} inversions); F1 n4=0.4 {:.3f} -> n4=0.8 {:.3f} "
                      "(drop {:.3f}, need > 0.2); F1 over n2 {:.3f}/{:.3f}/{:.3f} (worst drop {:.3f}, need <= 0.05)",
                      acc[0], acc[1], acc[2], acc[3], inversions, f1_04, f1_08, f1_04 - f1_08, f1[0], f1[1], f1[2],
                      worst_drop)};
}

Outcome p8() {
  const std::vector<Method> methods = all_methods();
  auto index = [&](Method m) { return static_cast<std::size_t>(std::find(methods.begin(), methods.end(), m) - methods.begin()); };
  RunOptions options;
  bool ok = true;
  std::string detail;
  for (auto task : parse_task_list("T2-T4")) {
    std::vector<std::vector<MetricSet>> per_method(methods.size());
    std::vector<double> flags(methods.size(), 0.0);
    for (int r = 0; r < 10; ++r) {
      auto cfg = default_task_config(task);
      cfg.seed = round_seed(kSeed, task, r);
      auto data = simulate_round(cfg);
      auto tests = analyze_round(data.observed, data.allocation, cfg.seed, options);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        auto d = decide(tests, data.scenario.size(), methods[m], options);
        flags[m] += static_cast<double>(d.predicted.size()) / 10.0;
        per_method[m].push_back(score(d, data.scenario.truth.body_set, data.scenario.size()));
      }
    }
    auto spec = [&](Method m) { return average(per_method[index(m)]).mean.specificity.value_or(0.0); };
    double s_bonf = spec(Method::FrtBonferroni);
    double s_01 = spec(Method::Frt01);
    double s_05 = spec(Method::Frt05);
    bool order = s_bonf >= s_01 && s_01 >= s_05;
    bool more = flags[index(Method::Baseline05)] >= flags[index(Method::Frt05)] &&
                flags[index(Method::Baseline01)] >= flags[index(Method::Frt01)];
    ok = ok && order && more;
    detail += fmt::format("{}: spec {:.3f} >= {:.3f} >= {:.3f}, flags baseline {:.1f}/{:.1f} vs frt {:.1f}/{:.1f}; ",
                          to_string(task), s_bonf, s_01, s_05, flags[index(Method::Baseline05)],
                          flags[index(Method::Baseline01)], flags[index(Method::Frt05)], flags[index(Method::Frt01)]);
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

Outcome p9() {
  auto suite = run_suite(default_task_config(TaskId::T9), parse_task_list("mirror"), 10, {Method::FrtBonferroni}, kSeed,
                         RunOptions{});
  bool ok = suite.failures.empty();
  std::string detail;
  for (const auto& row : suite.rows) {
    double rec = row.average.mean.recall.value_or(0.0);
    double acc = row.average.mean.accuracy.value_or(0.0);
    ok = ok && rec >= 0.85 && acc >= 0.85;
    detail += fmt::format("{} recall {:.3f} accuracy {:.3f}; ", to_string(row.task), rec, acc);
  }
  return {ok, detail + "need >= 0.85 each"};
}

Outcome p10() {
  auto base = default_task_config(TaskId::T0);
  auto tasks = parse_task_list("all");
  RunOptions one;
  RunOptions four;
  four.workers = 4;
  auto a = run_suite(base, tasks, 2, all_methods(), kSeed, one).csv();
  auto b = run_suite(base, tasks, 2, all_methods(), kSeed, four).csv();
  auto c = run_suite(base, tasks, 2, all_methods(), kSeed, one).csv();
  return {a == b && a == c, fmt::format("T0-T12 x 5 methods x 2 rounds; CSV of {} bytes identical for 1, 4 and 1 workers: {}",
                                        a.size(), a == b && a == c ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"P1", p1}, {"P2", p2}, {"P3", p3}, {"P4", p4}, {"P5", p5},
      {"P6", p6}, {"P7", p7}, {"P8", p8}, {"P9", p9}, {"P10", p10},
  };
  int failed = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !o.pass;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", checks.size() - static_cast<std::size_t>(failed), checks.size());
  return failed == 0 ? 0 : 1;
}
