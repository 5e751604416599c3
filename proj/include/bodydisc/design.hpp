// Completely randomized allocation of actions to stages, and the constrained
// re-randomization used by the randomization test.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bodydisc/core_model.hpp"
#include "bodydisc/rng.hpp"

namespace bodydisc {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

/// floor(T/(Q+1)) per action, remainder to action 0.
std::vector<int> balanced_counts(int stages, int signals);

/// Uniform draw over all sequences with the given multiset (counts n_0..n_Q).
ActionSequence randomize_allocation(std::span<const int> counts, Rng& rng);

/// Shuffles the entries equal to 0 or q among their own positions; all other
/// positions are untouched.
ActionSequence permute_for_test(const ActionSequence& observed, int q, Rng& rng);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Number of distinct constrained permutations for (observed, q).
std::uint64_t constrained_permutation_count(const ActionSequence& observed, int q);

/// Visits every way of choosing `chosen` of `pool` slots, as a 0/1 mask.
void for_each_combination(std::size_t pool, std::size_t chosen, const std::function<void(const std::vector<char>&)>& visit);

/// All distinct constrained permutations, lexicographically ascending.
/// Throws ConfigError when the count exceeds `cap`.
std::vector<ActionSequence> enumerate_permutations(const ActionSequence& observed, int q,
                                                   std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace bodydisc
