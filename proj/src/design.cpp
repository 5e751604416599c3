#include "bodydisc/design.hpp"

#include <algorithm>
#include <limits>

#include <fmt/core.h>

namespace bodydisc {

namespace {

void check_test_signal(const ActionSequence& observed, int q) {
  if (q < 1 || q > observed.signals()) throw ConfigError(fmt::format("signal {} outside 1..{}", q, observed.signals()));
  if (!observed.contains(q)) throw ConfigError(fmt::format("signal {} never occurs in the allocation", q));
  if (!observed.contains(0)) throw ConfigError("allocation has no control (action 0) stages");
}

std::vector<std::size_t> positions_of(const ActionSequence& s, int q) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (s[t] == 0 || s[t] == q) out.push_back(t);
  }
  return out;
}

}  // namespace

std::vector<int> balanced_counts(int stages, int signals) {
  if (signals < 0 || stages < signals + 1) {
    throw ConfigError(fmt::format("T={} is too small for {} actions", stages, signals + 1));
  }
  std::vector<int> c(static_cast<std::size_t>(signals) + 1, stages / (signals + 1));
  c[0] += stages % (signals + 1);
  return c;
}

ActionSequence randomize_allocation(std::span<const int> counts, Rng& rng) {
  if (counts.empty()) throw ConfigError("need at least one action count");
  std::vector<int> actions;
  for (std::size_t q = 0; q < counts.size(); ++q) {
    if (counts[q] < 1) throw ConfigError(fmt::format("n_{} = {} must be >= 1", q, counts[q]));
    actions.insert(actions.end(), static_cast<std::size_t>(counts[q]), static_cast<int>(q));
  }
  for (std::size_t i = actions.size(); i > 1; --i) std::swap(actions[i - 1], actions[uniform_index(rng, i)]);
  return ActionSequence(std::move(actions), static_cast<int>(counts.size()) - 1);
}

ActionSequence permute_for_test(const ActionSequence& observed, int q, Rng& rng) {
  check_test_signal(observed, q);
  auto pos = positions_of(observed, q);
  std::vector<int> labels;
  labels.reserve(pos.size());
  for (auto t : pos) labels.push_back(observed[t]);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(rng, i)]);
  auto actions = observed.actions();
  for (std::size_t i = 0; i < pos.size(); ++i) actions[pos[i]] = labels[i];
  return ActionSequence(std::move(actions), observed.signals());
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  __uint128_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > kMax) return kMax;
  }
  return static_cast<std::uint64_t>(r);
}

std::uint64_t constrained_permutation_count(const ActionSequence& observed, int q) {
  auto n0 = static_cast<std::uint64_t>(observed.count(0));
  auto nq = static_cast<std::uint64_t>(observed.count(q));
  return binomial(n0 + nq, nq);
}

void for_each_combination(std::size_t pool, std::size_t chosen, const std::function<void(const std::vector<char>&)>& visit) {
  if (chosen > pool) return;
  std::vector<char> mask(pool, 0);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(chosen), 1);
  do {
    visit(mask);
  } while (std::prev_permutation(mask.begin(), mask.end()));
}

std::vector<ActionSequence> enumerate_permutations(const ActionSequence& observed, int q, std::uint64_t cap) {
  check_test_signal(observed, q);
  auto total = constrained_permutation_count(observed, q);
  if (total > cap) {
    throw ConfigError(fmt::format("{} constrained permutations exceed the enumeration cap {}", total, cap));
  }
  auto pos = positions_of(observed, q);
  std::vector<ActionSequence> out;
  out.reserve(total);
  for_each_combination(pos.size(), static_cast<std::size_t>(observed.count(q)), [&](const std::vector<char>& mask) {
    auto actions = observed.actions();
    for (std::size_t i = 0; i < pos.size(); ++i) actions[pos[i]] = mask[i] ? q : 0;
    out.emplace_back(std::move(actions), observed.signals());
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bodydisc
