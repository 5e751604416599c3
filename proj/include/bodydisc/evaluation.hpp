// Scoring a predicted body set against ground truth.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bodydisc {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

/// Undefined (0/0) metrics are std::nullopt and print as N/A.
struct MetricSet {
  std::optional<double> accuracy;
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> specificity;
  std::optional<double> f1;
  std::optional<double> average_precision;

  static constexpr std::size_t kCount = 6;
  std::optional<double> get(std::size_t i) const;
  void set(std::size_t i, std::optional<double> v);
  static const char* name(std::size_t i);
};

/// Object ids are 0-based indices in [0, objects).
Confusion confusion(std::span<const int> predicted, std::span<const int> truth, std::size_t objects);

/// Thresholded metrics; average_precision is left unset.
MetricSet metrics(const Confusion& counts);

/// Area under the precision-recall curve of the ranking by ascending score,
/// ties broken by object id. N/A when truth is empty.
std::optional<double> average_precision(std::span<const double> scores, std::span<const int> truth);

struct MetricAverage {
  MetricSet mean;
  std::size_t rounds = 0;
  std::array<std::size_t, MetricSet::kCount> excluded{};  // N/A rounds per metric
};

/// Arithmetic mean per metric over rounds, skipping N/A values.
MetricAverage average(std::span<const MetricSet> rounds);

std::string format_metric(std::optional<double> v, int decimals = 6);

}  // namespace bodydisc
