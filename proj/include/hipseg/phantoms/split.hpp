#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/common/random.hpp"

namespace hipseg {

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Cohort-stratified train/validation/test partition of item indices.
//
// Subset sizes are round(n * fraction) for validation and test, the rest is
// training. Items are ordered by their relative rank inside their (shuffled)
// cohort, which interleaves cohorts proportionally; test takes the head of
// that order, validation the next block, training the remainder.
inline HoldoutSplit split_holdout(std::span<const std::string> cohorts, std::array<double, 3> fractions,
                                  std::uint64_t seed) {
  if (cohorts.empty()) throw std::invalid_argument("split_holdout: dataset is empty");
  for (double f : fractions) {
    if (!(f >= 0.0)) throw std::invalid_argument("split_holdout: fractions must be non-negative");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split_holdout: fractions must sum to 1");
  }
  const std::size_t n = cohorts.size();
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[1]));
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[2]));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n) {
    throw std::invalid_argument("split_holdout: " + std::to_string(n) +
                                " items cannot fill non-empty train/validation/test subsets with these fractions");
  }

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[cohorts[i]].push_back(i);

  Rng rng = make_rng(seed, {0x5bd1e995});
  struct Keyed {
    double key;
    std::size_t group;
    std::size_t item;
  };
  std::vector<Keyed> order;
  std::size_t g = 0;
  for (auto& [tag, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t r = 0; r < members.size(); ++r) {
      order.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(members.size()), g, members[r]});
    }
    ++g;
  }
  std::stable_sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
    return a.key < b.key || (a.key == b.key && a.group < b.group);
  });

  HoldoutSplit out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    auto& dst = r < n_test ? out.test : r < n_test + n_val ? out.validation : out.train;
    dst.push_back(order[r].item);
  }
  for (auto* v : {&out.train, &out.validation, &out.test}) std::sort(v->begin(), v->end());
  return out;
}

}  // namespace hipseg
