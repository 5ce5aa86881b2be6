#include <doctest.h>

#include <cmath>
#include <vector>

#include "carstat/errors.hpp"
#include "carstat/randomization.hpp"

using namespace carstat;

namespace {

std::vector<int> uniform_strata(int n, int num_strata, std::uint64_t seed) {
  Rng rng(seed, 5000);
  std::vector<int> s(n);
  for (int i = 0; i < n; ++i) s[i] = static_cast<int>(rng.next_below(num_strata));
  return s;
}

}  // namespace

TEST_CASE("SBR: every complete block is exactly balanced") {
  DesignSpec spec{Method::SBR, 0.5, 6, 0.75};
  auto strata = uniform_strata(600, 3, 11);
  auto arms = assign_all(spec, strata, nullptr, 3, 42);
  // Collect per-stratum assignment sequences and check each chunk of 6.
  for (int s = 0; s < 3; ++s) {
    std::vector<int> seq;
    for (std::size_t i = 0; i < strata.size(); ++i) {
      if (strata[i] == s) seq.push_back(arms[i]);
    }
    for (std::size_t b = 0; b + 6 <= seq.size(); b += 6) {
      int ones = 0;
      for (std::size_t j = b; j < b + 6; ++j) ones += seq[j];
      CHECK(ones == 3);
    }
  }
}

TEST_CASE("SBR: pi = 2/3 gives 4 treated per block") {
  DesignSpec spec{Method::SBR, 2.0 / 3.0, 6, 0.75};
  auto strata = std::vector<int>(60, 0);
  auto arms = assign_all(spec, strata, nullptr, 1, 7);
  for (int b = 0; b < 60; b += 6) {
    int ones = 0;
    for (int j = b; j < b + 6; ++j) ones += arms[j];
    CHECK(ones == 4);
  }
}

TEST_CASE("SBR: hard prefix imbalance bound") {
  for (double pi : {0.5, 2.0 / 3.0}) {
    DesignSpec spec{Method::SBR, pi, 6, 0.75};
    double bound = 6 * std::max(pi, 1.0 - pi) + 1e-12;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
      auto strata = uniform_strata(500, 4, seed);
      RandomizerState state(spec, 4, {}, Rng(seed, 0));
      for (int s : strata) {
        assign_next(state, spec, s);
        for (int k = 0; k < 4; ++k) CHECK(std::fabs(state.imbalance(k)) <= bound);
      }
    }
  }
}

TEST_CASE("SBR rejects non-integer block_size * pi") {
  DesignSpec spec{Method::SBR, 0.4, 6, 0.75};
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("SBCD: fresh stratum draws Bernoulli(pi)") {
  DesignSpec spec{Method::SBCD, 0.5, 6, 0.75};
  // Each unit goes to its own one-shot state, so D = 0 at every draw.
  int treated = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    RandomizerState state(spec, 1, {}, Rng(1234, i));
    treated += assign_next(state, spec, 0);
  }
  double se = std::sqrt(0.25 / n);
  CHECK(std::fabs(treated / static_cast<double>(n) - 0.5) < 3.0 * se);
}

TEST_CASE("SBCD drift: mean |D| stays bounded as n grows") {
  DesignSpec spec{Method::SBCD, 0.5, 6, 0.75};
  double mean_abs[3] = {0, 0, 0};
  int sizes[3] = {200, 800, 3200};
  const int runs = 200;
  for (int k = 0; k < 3; ++k) {
    for (int r = 0; r < runs; ++r) {
      auto strata = std::vector<int>(sizes[k], 0);
      RandomizerState state(spec, 1, {}, Rng(999 + r, k));
      for (int s : strata) assign_next(state, spec, s);
      mean_abs[k] += std::fabs(state.imbalance(0));
    }
    mean_abs[k] /= runs;
    CHECK(mean_abs[k] < 3.0);  // positive-recurrent chain stays near 0
  }
  CHECK(mean_abs[2] < mean_abs[0] + 1.0);  // no growth with n
}

TEST_CASE("SBCD keeps max imbalance small at n = 800") {
  // Bound calibrated from a 4000-run oracle: worst observed max |D| was 4.0.
  DesignSpec spec{Method::SBCD, 0.5, 6, 0.75};
  const int runs = 1000, n = 800, S = 4;
  auto strata = uniform_strata(n, S, 13);
  int within = 0;
  for (int r = 0; r < runs; ++r) {
    RandomizerState state(spec, S, {}, Rng(4242, r));
    for (int s : strata) assign_next(state, spec, s);
    double mx = 0.0;
    for (int s = 0; s < S; ++s) mx = std::max(mx, std::fabs(state.imbalance(s)));
    within += mx <= 5.0;
  }
  CHECK(within >= 990);
}

TEST_CASE("SR hits the target fraction") {
  DesignSpec spec{Method::SR, 0.5, 6, 0.75};
  const int n = 100000;
  auto strata = std::vector<int>(n, 0);
  auto arms = assign_all(spec, strata, nullptr, 1, 31);
  int ones = 0;
  for (int a : arms) ones += a;
  double se = std::sqrt(0.25 / n);
  CHECK(std::fabs(ones / static_cast<double>(n) - 0.5) < 3.0 * se);
}

TEST_CASE("empirical q(s): SR matches pi(1-pi), SBR/SBCD are near zero") {
  const int n = 800, runs = 400, S = 4;
  for (Method m : {Method::SR, Method::SBR, Method::SBCD}) {
    DesignSpec spec{m, 0.5, 6, 0.75};
    std::vector<double> sum_d(S, 0.0), sum_d2(S, 0.0);
    for (int r = 0; r < runs; ++r) {
      auto strata = uniform_strata(n, S, 7000 + r);
      RandomizerState state(spec, S, {}, Rng(53, r));
      for (int s : strata) assign_next(state, spec, s);
      for (int s = 0; s < S; ++s) {
        sum_d[s] += state.imbalance(s);
        sum_d2[s] += state.imbalance(s) * state.imbalance(s);
      }
    }
    for (int s = 0; s < S; ++s) {
      double var_d = sum_d2[s] / runs - (sum_d[s] / runs) * (sum_d[s] / runs);
      double q_hat = var_d / (n * (1.0 / S));
      if (m == Method::SR) {
        CHECK(std::fabs(q_hat - 0.25) < 0.04);
      } else {
        CHECK(q_hat < 0.02);
      }
    }
  }
}

TEST_CASE("assign_all is deterministic and matches folding assign_next") {
  DesignSpec spec{Method::SBCD, 2.0 / 3.0, 6, 0.75};
  auto strata = uniform_strata(300, 3, 5);
  auto a1 = assign_all(spec, strata, nullptr, 3, 77);
  auto a2 = assign_all(spec, strata, nullptr, 3, 77);
  CHECK(a1 == a2);
  RandomizerState state(spec, 3, {}, Rng(77, 0));
  std::vector<int> folded;
  for (int s : strata) folded.push_back(assign_next(state, spec, s));
  CHECK(a1 == folded);
  auto a3 = assign_all(spec, strata, nullptr, 3, 78);
  CHECK(a1 != a3);
}

TEST_CASE("unknown stratum is rejected") {
  DesignSpec spec{Method::SR, 0.5, 6, 0.75};
  RandomizerState state(spec, 2, {}, Rng(1, 0));
  CHECK_THROWS_AS(assign_next(state, spec, 5), Error);
}

TEST_CASE("minimization needs margins and balances them") {
  DesignSpec spec{Method::MIN, 0.5, 6, 0.75};
  RandomizerState state(spec, 1, {2, 3}, Rng(8, 0));
  CHECK_THROWS_AS(assign_next(state, spec, 0), Error);  // no profile

  // Two margins; check marginal imbalance stays small.
  const int n = 900;
  Rng cov_rng(21, 1);
  std::vector<std::vector<int>> profiles(n);
  std::vector<int> strata(n, 0);
  for (int i = 0; i < n; ++i) {
    profiles[i] = {static_cast<int>(cov_rng.next_below(2)),
                   static_cast<int>(cov_rng.next_below(3))};
  }
  auto arms = assign_all(spec, strata, &profiles, 1, 4);
  double d_margin[2][3] = {};
  for (int i = 0; i < n; ++i) {
    d_margin[0][profiles[i][0]] += arms[i] - 0.5;
    d_margin[1][profiles[i][1]] += arms[i] - 0.5;
  }
  for (int v = 0; v < 2; ++v) CHECK(std::fabs(d_margin[0][v]) < 6.0);
  for (int v = 0; v < 3; ++v) CHECK(std::fabs(d_margin[1][v]) < 6.0);
}

TEST_CASE("design q values follow the method") {
  DesignSpec sr{Method::SR, 0.3, 6, 0.75};
  CHECK(sr.q(0).value() == doctest::Approx(0.21));
  DesignSpec sbr{Method::SBR, 0.5, 6, 0.75};
  CHECK(sbr.q(0).value() == doctest::Approx(0.0));
  DesignSpec sbcd{Method::SBCD, 0.5, 6, 0.75};
  CHECK(sbcd.q(1).value() == doctest::Approx(0.0));
  DesignSpec min{Method::MIN, 0.5, 6, 0.75};
  CHECK_FALSE(min.q(0).has_value());
}
