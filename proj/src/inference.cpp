#include "bodydisc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/distributions/normal.hpp>
#include <fmt/core.h>

#include "bodydisc/parallel.hpp"

namespace bodydisc {

// ---------------------------------------------------------------------------
// DeltaPanel

DeltaPanel::DeltaPanel(LayoutPtr layout, std::size_t stages)
    : layout_(std::move(layout)), stages_(stages), data_(layout_->objects() * layout_->columns() * stages, 0.0) {}

DeltaPanel DeltaPanel::from_snapshots(const std::vector<WorldSnapshot>& snapshots) {
  if (snapshots.size() < 2) throw StructuralError("need at least two snapshots to form deltas");
  DeltaPanel panel(snapshots.front().layout(), snapshots.size() - 1);
  for (std::size_t t = 1; t < snapshots.size(); ++t) {
    auto d = stage_delta(snapshots[t - 1], snapshots[t]);
    for (std::size_t n = 0; n < d.rows(); ++n) {
      for (std::size_t c = 0; c < d.cols(); ++c) panel.series(n, c)[t - 1] = d.at(n, c);
    }
  }
  return panel;
}

std::span<const double> DeltaPanel::series(std::size_t object, std::size_t column) const {
  return {data_.data() + (object * layout_->columns() + column) * stages_, stages_};
}

std::span<double> DeltaPanel::series(std::size_t object, std::size_t column) {
  return {data_.data() + (object * layout_->columns() + column) * stages_, stages_};
}

// ---------------------------------------------------------------------------
// Estimation

double diff_in_means(std::span<const double> deltas, const ActionSequence& allocation, int q) {
  if (deltas.size() != allocation.size()) {
    throw StructuralError(fmt::format("{} deltas for {} stages", deltas.size(), allocation.size()));
  }
  double sum_q = 0.0;
  double sum_0 = 0.0;
  int n_q = 0;
  int n_0 = 0;
  for (std::size_t t = 0; t < deltas.size(); ++t) {
    if (allocation[t] == q) {
      sum_q += deltas[t];
      ++n_q;
    } else if (allocation[t] == 0) {
      sum_0 += deltas[t];
      ++n_0;
    }
  }
  if (q == 0 || n_q == 0 || n_0 == 0) throw ConfigError(fmt::format("allocation lacks action {} or action 0", q));
  return sum_q / n_q - sum_0 / n_0;
}

double oracle_true_effect(const PotentialOutcomes& po) {
  if (po.treated.size() != po.control.size() || po.treated.empty()) {
    throw StructuralError("potential outcome columns must be non-empty and of equal length");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < po.treated.size(); ++t) total += po.treated[t] - po.control[t];
  return total / static_cast<double>(po.treated.size());
}

VarianceComponents oracle_variance(const PotentialOutcomes& po, int n_q, int n_0) {
  const std::size_t T = po.treated.size();
  if (po.control.size() != T) throw StructuralError("potential outcome columns differ in length");
  if (T < 2) throw ConfigError("variance needs T >= 2");
  if (n_q < 1 || n_0 < 1) throw ConfigError("variance needs n_q, n_0 >= 1");
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double mq = mean(po.treated);
  const double m0 = mean(po.control);
  VarianceComponents vc;
  for (std::size_t t = 0; t < T; ++t) {
    double a = po.treated[t] - mq;
    double b = po.control[t] - m0;
    vc.s_q_sq += a * a;
    vc.s_0_sq += b * b;
    vc.s_tau_q_sq += (a - b) * (a - b);
  }
  const double norm = 1.0 / static_cast<double>(T - 1);
  vc.s_q_sq *= norm;
  vc.s_0_sq *= norm;
  vc.s_tau_q_sq *= norm;
  vc.var_xi = vc.s_q_sq / n_q + vc.s_0_sq / n_0 - vc.s_tau_q_sq / (n_q + n_0);
  return vc;
}

// ---------------------------------------------------------------------------
// Randomization test

FrtResult frt_p_value(std::span<const double> deltas, const ActionSequence& observed, int q, const FrtOptions& options,
                      Rng& rng) {
  if (options.mc_samples < 1) throw ConfigError("Monte Carlo sample count must be >= 1");
  FrtResult result;
  result.xi_obs = diff_in_means(deltas, observed, q);

  // Values at the 0/q positions; everything else is fixed under the constrained permutation.
  std::vector<double> pool;
  double total = 0.0;
  for (std::size_t t = 0; t < deltas.size(); ++t) {
    if (observed[t] == 0 || observed[t] == q) {
      pool.push_back(deltas[t]);
      total += deltas[t];
    }
  }
  const auto n_q = static_cast<std::size_t>(observed.count(q));
  const auto n_0 = pool.size() - n_q;
  const double inv_q = 1.0 / static_cast<double>(n_q);
  const double inv_0 = 1.0 / static_cast<double>(n_0);
  auto statistic = [&](double sum_q) { return sum_q * inv_q - (total - sum_q) * inv_0; };

  // Every permutation gives the same statistic when the pool is constant.
  if (std::all_of(pool.begin(), pool.end(), [&](double v) { return v == pool.front(); })) {
    result.p_value = 1.0;
    result.exact = true;
    result.draws = 0;
    return result;
  }

  const double observed_abs = std::abs(result.xi_obs);
  const double bar = observed_abs - 1e-9 * std::max(1.0, observed_abs);
  std::uint64_t hits = 0;

  const auto count = binomial(pool.size(), n_q);
  if (options.allow_exact && count <= options.exact_cap) {
    std::vector<char> mask(pool.size(), 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n_q), 1);
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (mask[i]) s += pool[i];
      }
      if (std::abs(statistic(s)) >= bar) ++hits;
    } while (std::prev_permutation(mask.begin(), mask.end()));
    result.exact = true;
    result.draws = count;
  } else {
    // Partial Fisher-Yates: the first n_q slots after each pass are a uniform subset.
    std::vector<double> work = pool;
    const auto size = work.size();
    for (int m = 0; m < options.mc_samples; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_q; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, size - i));
        std::swap(work[i], work[j]);
        s += work[i];
      }
      if (std::abs(statistic(s)) >= bar) ++hits;
    }
    result.exact = false;
    result.draws = static_cast<std::uint64_t>(options.mc_samples);
  }
  result.p_value = static_cast<double>(hits) / static_cast<double>(result.draws);
  return result;
}

std::vector<TestEntry> run_tests(const DeltaPanel& panel, const ActionSequence& allocation, const EngineOptions& options) {
  if (panel.stages() != allocation.size()) throw StructuralError("panel and allocation lengths differ");
  const auto& layout = *panel.layout();
  std::vector<TestEntry> tests;
  for (std::size_t n = 0; n < layout.objects(); ++n) {
    for (std::size_t c = 0; c < layout.columns(); ++c) {
      if (!layout.present(static_cast<int>(n), static_cast<int>(c))) continue;
      for (int q = 1; q <= allocation.signals(); ++q) {
        tests.push_back({static_cast<int>(n), static_cast<int>(c), q});
      }
    }
  }
  parallel_for(tests.size(), options.workers, [&](std::size_t i) {
    auto& t = tests[i];
    Rng rng = make_rng(options.seed, {static_cast<std::uint64_t>(t.object), static_cast<std::uint64_t>(t.column),
                                      static_cast<std::uint64_t>(t.signal)});
    auto r = frt_p_value(panel.series(static_cast<std::size_t>(t.object), static_cast<std::size_t>(t.column)),
                         allocation, t.signal, options.frt, rng);
    t.xi_hat = r.xi_obs;
    t.p_value = r.p_value;
    t.exact = r.exact;
  });
  return tests;
}

// ---------------------------------------------------------------------------
// Decisions

namespace {

std::vector<int> verdict_to_list(const std::vector<char>& verdict) {
  std::vector<int> out;
  for (std::size_t n = 0; n < verdict.size(); ++n) {
    if (verdict[n]) out.push_back(static_cast<int>(n));
  }
  return out;
}

std::vector<double> min_per_object(const std::vector<TestEntry>& tests, std::size_t objects) {
  std::vector<double> out(objects, 1.0);
  for (const auto& t : tests) {
    auto& v = out[static_cast<std::size_t>(t.object)];
    v = std::min(v, t.p_value);
  }
  return out;
}

nlohmann::json tests_json(const std::vector<TestEntry>& tests) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : tests) {
    arr.push_back({{"object", t.object},
                   {"feature", t.column},
                   {"signal", t.signal},
                   {"xi_hat", t.xi_hat},
                   {"p_value", t.p_value},
                   {"exact", t.exact},
                   {"rejected", t.rejected}});
  }
  return arr;
}

}  // namespace

std::vector<int> TestReport::predicted_body() const { return verdict_to_list(body_verdict); }

std::vector<double> TestReport::object_scores() const { return min_per_object(tests, objects); }

std::string TestReport::mode() const {
  if (correction == Correction::Bonferroni) return "bonferroni";
  return fmt::format("none-{}", alpha);
}

nlohmann::json TestReport::to_json() const {
  return {{"objects", objects},
          {"alpha", alpha},
          {"correction", mode()},
          {"threshold", threshold},
          {"tests_count", tests.size()},
          {"mc_samples", mc_samples},
          {"predicted_body", predicted_body()},
          {"tests", tests_json(tests)}};
}

TestReport decide_body(std::vector<TestEntry> tests, std::size_t objects, double alpha, Correction correction,
                       int mc_samples) {
  if (tests.empty()) throw ConfigError("cannot decide on an empty test table");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  TestReport report;
  report.objects = objects;
  report.alpha = alpha;
  report.correction = correction;
  report.mc_samples = mc_samples;
  report.threshold = correction == Correction::Bonferroni ? alpha / static_cast<double>(tests.size()) : alpha;
  report.body_verdict.assign(objects, 0);
  for (auto& t : tests) {
    if (t.object < 0 || static_cast<std::size_t>(t.object) >= objects) {
      throw StructuralError(fmt::format("test references object {} of {}", t.object, objects));
    }
    t.rejected = t.p_value <= report.threshold;
    if (t.rejected) report.body_verdict[static_cast<std::size_t>(t.object)] = 1;
  }
  report.tests = std::move(tests);
  return report;
}

std::vector<int> BaselineReport::predicted_body() const { return verdict_to_list(body_verdict); }

std::vector<double> BaselineReport::object_scores() const { return min_per_object(tests, objects); }

nlohmann::json BaselineReport::to_json() const {
  return {{"objects", objects},
          {"alpha", alpha},
          {"mean", mean},
          {"variance", variance},
          {"critical", critical},
          {"degenerate", degenerate},
          {"predicted_body", predicted_body()},
          {"tests", tests_json(tests)}};
}

BaselineReport baseline_decide(std::span<const EffectEstimate> estimates, std::size_t objects, double alpha) {
  if (estimates.size() < 2) throw ConfigError("baseline needs at least two estimates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  BaselineReport report;
  report.objects = objects;
  report.alpha = alpha;
  report.body_verdict.assign(objects, 0);

  double sum = 0.0;
  for (const auto& e : estimates) sum += e.xi_hat;
  report.mean = sum / static_cast<double>(estimates.size());
  double ss = 0.0;
  for (const auto& e : estimates) ss += (e.xi_hat - report.mean) * (e.xi_hat - report.mean);
  report.variance = ss / static_cast<double>(estimates.size() - 1);
  // Identical estimates can leave rounding residue in ss; their spread is exactly zero.
  auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end(),
                                      [](const auto& a, const auto& b) { return a.xi_hat < b.xi_hat; });
  if (lo->xi_hat == hi->xi_hat) report.variance = 0.0;

  const boost::math::normal_distribution<double> standard;
  report.critical = boost::math::quantile(standard, 1.0 - alpha / 2.0);
  report.degenerate = !(report.variance > 0.0);
  const double half_width = report.critical * report.variance;

  for (const auto& e : estimates) {
    if (e.object < 0 || static_cast<std::size_t>(e.object) >= objects) {
      throw StructuralError(fmt::format("estimate references object {} of {}", e.object, objects));
    }
    TestEntry t;
    t.object = e.object;
    t.column = e.column;
    t.signal = e.signal;
    t.xi_hat = e.xi_hat;
    const double dev = std::abs(e.xi_hat - report.mean);
    if (report.degenerate) {
      t.p_value = 1.0;
      t.rejected = false;
    } else {
      t.p_value = 2.0 * boost::math::cdf(boost::math::complement(standard, dev / report.variance));
      t.rejected = dev > half_width;
    }
    if (t.rejected) report.body_verdict[static_cast<std::size_t>(e.object)] = 1;
    report.tests.push_back(t);
  }
  return report;
}

std::vector<EffectSummary> summarize_effects(const TestReport& report) {
  std::vector<EffectSummary> out;
  for (const auto& t : report.tests) {
    if (t.rejected) out.push_back({t.object, t.column, t.signal, t.xi_hat, t.p_value});
  }
  return out;
}

void write_effects_csv(const TestReport& report, std::ostream& out) {
  out << "object,feature,signal,xi_hat,p_value,rejected\n";
  for (const auto& t : report.tests) {
    out << fmt::format("{},{},{},{:.9g},{:.9g},{}\n", t.object, t.column, t.signal, t.xi_hat, t.p_value,
                       t.rejected ? 1 : 0);
  }
}

}  // namespace bodydisc
