#include "bodydisc/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "bodydisc/core_model.hpp"

namespace bodydisc {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<char> membership(std::span<const int> ids, std::size_t objects) {
  std::vector<char> in(objects, 0);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= objects) {
      throw ConfigError(fmt::format("object id {} outside [0, {})", id, objects));
    }
    in[static_cast<std::size_t>(id)] = 1;
  }
  return in;
}

}  // namespace

std::optional<double> MetricSet::get(std::size_t i) const {
  switch (i) {
    case 0: return accuracy;
    case 1: return recall;
    case 2: return precision;
    case 3: return specificity;
    case 4: return f1;
    case 5: return average_precision;
  }
  throw std::out_of_range("metric index");
}

void MetricSet::set(std::size_t i, std::optional<double> v) {
  switch (i) {
    case 0: accuracy = v; return;
    case 1: recall = v; return;
    case 2: precision = v; return;
    case 3: specificity = v; return;
    case 4: f1 = v; return;
    case 5: average_precision = v; return;
  }
  throw std::out_of_range("metric index");
}

const char* MetricSet::name(std::size_t i) {
  static constexpr const char* kNames[] = {"accuracy", "recall", "precision", "specificity", "f1", "ap"};
  return kNames[i];
}

Confusion confusion(std::span<const int> predicted, std::span<const int> truth, std::size_t objects) {
  auto p = membership(predicted, objects);
  auto t = membership(truth, objects);
  Confusion c;
  for (std::size_t n = 0; n < objects; ++n) {
    if (p[n] && t[n]) ++c.tp;
    else if (p[n]) ++c.fp;
    else if (t[n]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricSet metrics(const Confusion& c) {
  MetricSet m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const int> truth) {
  if (truth.empty()) return std::nullopt;
  auto relevant = membership(truth, scores.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (relevant[order[rank]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(hits);
}

MetricAverage average(std::span<const MetricSet> rounds) {
  MetricAverage out;
  out.rounds = rounds.size();
  for (std::size_t i = 0; i < MetricSet::kCount; ++i) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& r : rounds) {
      if (auto v = r.get(i)) {
        sum += *v;
        ++used;
      }
    }
    out.excluded[i] = rounds.size() - used;
    if (used > 0) out.mean.set(i, sum / static_cast<double>(used));
  }
  return out;
}

std::string format_metric(std::optional<double> v, int decimals) {
  if (!v) return "N/A";
  return fmt::format("{:.{}f}", *v, decimals);
}

}  // namespace bodydisc
