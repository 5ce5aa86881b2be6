#pragma once

#include <string>
#include <vector>

#include "carstat/rng.hpp"
#include "carstat/trial_data.hpp"

namespace carstat::test {

// 6-row two-stratum dataset used across modules; strata align with levels.
inline TrialDataset make_d0() {
  std::vector<RawRow> rows = {
      {3, 1, "s1", "1"}, {5, 1, "s1", "1"}, {1, 0, "s1", "1"},
      {2, 1, "s2", "0"}, {2, 0, "s2", "0"}, {4, 0, "s2", "0"},
  };
  return build_dataset(rows, 0.5);
}

// 8-row two-stratum dataset where both levels appear in both strata.
inline TrialDataset make_d1() {
  std::vector<RawRow> rows = {
      {2, 1, "s1", "1"}, {0, 0, "s1", "1"}, {1, 1, "s1", "0"}, {1, 0, "s1", "0"},
      {6, 1, "s2", "1"}, {2, 0, "s2", "1"}, {3, 1, "s2", "0"}, {1, 0, "s2", "0"},
  };
  return build_dataset(rows, 0.5);
}

// Random dataset with the requested shape; assignment is an independent coin,
// outcomes depend on stratum, level and arm so nothing degenerates.
inline TrialDataset random_dataset(int n, int levels, int strata, double pi,
                                   std::uint64_t seed) {
  Rng rng(seed, 7001);
  std::vector<RawRow> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    int x = static_cast<int>(rng.next_below(levels));
    int s = static_cast<int>(rng.next_below(strata));
    int a = rng.next_bernoulli(pi) ? 1 : 0;
    double y = 0.7 * x + 1.3 * s + 2.0 * a * x + 0.5 * a + rng.next_normal();
    rows.push_back({y, a, "s" + std::to_string(s), std::to_string(x)});
  }
  return build_dataset(rows, pi);
}

}  // namespace carstat::test
