#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "carstat/errors.hpp"
#include "carstat/trial_data.hpp"
#include "test_helpers.hpp"

using namespace carstat;
using test::make_d0;
using test::random_dataset;

TEST_CASE("build_dataset counts D0 correctly") {
  auto ds = make_d0();
  CHECK(ds.n() == 6);
  CHECK(ds.num_strata() == 2);
  CHECK(ds.num_levels() == 2);
  int n1 = 0;
  for (const auto& u : ds.units()) n1 += u.a;
  CHECK(n1 == 3);
  CHECK(ds.n_ax(1, 1) == 2);
  CHECK(ds.n_ax(0, 1) == 1);
  CHECK(ds.n_ax(1, 0) == 1);
  CHECK(ds.n_ax(0, 0) == 2);
  CHECK(ds.stratum_labels() == std::vector<std::string>{"s1", "s2"});
}

TEST_CASE("build_dataset single row") {
  auto ds = build_dataset({{0, 1, "s1", "0"}}, 0.5);
  CHECK(ds.n() == 1);
  CHECK(ds.n_ax(1, 0) == 1);
}

TEST_CASE("build_dataset error paths") {
  CHECK_THROWS_AS(build_dataset({}, 0.5), Error);
  CHECK_THROWS_AS(build_dataset({{1, 2, "s", "0"}}, 0.5), Error);
  CHECK_THROWS_AS(build_dataset({{std::nan(""), 1, "s", "0"}}, 0.5), Error);
  CHECK_THROWS_AS(build_dataset({{1, 1, "s", "0"}}, 0.0), Error);
  CHECK_THROWS_AS(build_dataset({{1, 1, "s", "0"}}, 1.0), Error);
  try {
    build_dataset({}, 0.5);
  } catch (const Error& e) {
    CHECK(e.code() == Err::empty_input);
  }
}

TEST_CASE("numeric labels intern in numeric order") {
  std::vector<RawRow> rows = {{1, 1, "10", "2"}, {2, 0, "2", "10"}, {3, 1, "2", "2"}};
  auto ds = build_dataset(rows, 0.5);
  CHECK(ds.stratum_labels() == std::vector<std::string>{"2", "10"});
  CHECK(ds.level_labels() == std::vector<std::string>{"2", "10"});
}

TEST_CASE("cell_stats on D0 matches hand computation") {
  auto cs = cell_stats(make_d0());
  CHECK(cs.cell_ax(1, 1).mean == doctest::Approx(4.0));
  CHECK(cs.cell_ax(0, 1).mean == doctest::Approx(1.0));
  CHECK(cs.cell_ax(1, 0).mean == doctest::Approx(2.0));
  CHECK(cs.cell_ax(0, 0).mean == doctest::Approx(3.0));
  CHECK(cs.cell_ax(1, 1).var == doctest::Approx(1.0));
  CHECK(cs.cell_ax(0, 0).var == doctest::Approx(1.0));
  CHECK(cs.cell_ax(0, 1).var == doctest::Approx(0.0));
  CHECK(cs.cell_ax(1, 0).var == doctest::Approx(0.0));
}

TEST_CASE("cell_stats constant outcome") {
  std::vector<RawRow> rows;
  for (int i = 0; i < 8; ++i) {
    rows.push_back({2.5, i % 2, i < 4 ? "a" : "b", i % 2 ? "1" : "0"});
  }
  auto cs = cell_stats(build_dataset(rows, 0.5));
  for (int a = 0; a < 2; ++a) {
    for (int x = 0; x < 2; ++x) {
      if (cs.cell_ax(a, x).present()) {
        CHECK(cs.cell_ax(a, x).mean == doctest::Approx(2.5));
        CHECK(cs.cell_ax(a, x).var == doctest::Approx(0.0));
      }
    }
  }
}

TEST_CASE("cell_stats flags absent cells instead of NaN") {
  // no treated units at x = 1
  std::vector<RawRow> rows = {{1, 0, "s", "1"}, {2, 1, "s", "0"}, {3, 0, "s", "0"}};
  auto cs = cell_stats(build_dataset(rows, 0.5));
  CHECK_FALSE(cs.cell_ax(1, 1).present());
  CHECK(std::isfinite(cs.cell_ax(1, 1).mean));  // zero-filled, not NaN
  CHECK(cs.cell_ax(0, 1).present());
}

TEST_CASE("imbalance on D0") {
  auto d = imbalance(make_d0());
  CHECK(d[0] == doctest::Approx(0.5));
  CHECK(d[1] == doctest::Approx(-0.5));
}

TEST_CASE("imbalance degenerate and balanced strata") {
  // all treated in one stratum at pi = 1/2: D = n(s)/2
  std::vector<RawRow> rows = {{1, 1, "s", "0"}, {2, 1, "s", "0"}, {3, 1, "s", "0"}};
  auto d = imbalance(build_dataset(rows, 0.5));
  CHECK(d[0] == doctest::Approx(1.5));

  std::vector<RawRow> bal = {{1, 1, "s", "0"}, {2, 0, "s", "0"}};
  CHECK(imbalance(build_dataset(bal, 0.5))[0] == doctest::Approx(0.0));
}

TEST_CASE("count closure and imbalance additivity on random datasets") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    auto ds = random_dataset(500, 3, 4, 0.3, seed);
    for (int a = 0; a < 2; ++a) {
      int total = 0;
      for (int x = 0; x < ds.num_levels(); ++x) {
        total += ds.n_ax(a, x);
        int per_strata = 0;
        for (int s = 0; s < ds.num_strata(); ++s) per_strata += ds.n_axs(a, x, s);
        CHECK(per_strata == ds.n_ax(a, x));
      }
      int n_a = 0;
      for (const auto& u : ds.units()) n_a += (u.a == a);
      CHECK(total == n_a);
    }
    auto d = imbalance(ds);
    double sum = 0.0;
    for (double v : d) sum += v;
    int n1 = 0;
    for (const auto& u : ds.units()) n1 += u.a;
    CHECK(std::fabs(sum - (n1 - ds.pi() * ds.n())) < 1e-12);
  }
}

TEST_CASE("cell_stats is permutation invariant") {
  auto ds = random_dataset(300, 2, 3, 0.5, 17);
  std::vector<RawRow> rows;
  for (const auto& u : ds.units()) {
    rows.push_back({u.y, u.a, ds.stratum_labels()[u.s], ds.level_labels()[u.x]});
  }
  auto cs1 = cell_stats(build_dataset(rows, ds.pi()));
  std::mt19937 gen(99);
  std::shuffle(rows.begin(), rows.end(), gen);
  auto cs2 = cell_stats(build_dataset(rows, ds.pi()));
  for (int a = 0; a < 2; ++a) {
    for (int x = 0; x < cs1.num_levels; ++x) {
      CHECK(cs1.cell_ax(a, x).mean == doctest::Approx(cs2.cell_ax(a, x).mean).epsilon(1e-12));
      CHECK(cs1.cell_ax(a, x).var == doctest::Approx(cs2.cell_ax(a, x).var).epsilon(1e-12));
    }
  }
}

TEST_CASE("validate_for_test on D0 passes for stratification") {
  auto rep = validate_for_test(make_d0(), CovariateKind::stratification);
  CHECK(rep.assumption5);
  CHECK(rep.dropped_cells.empty());
  CHECK(rep.level_testable[0]);
  CHECK(rep.level_testable[1]);
}

TEST_CASE("validate_for_test detects a mixed stratum") {
  // D0 with unit 3's level flipped to 0: stratum s1 now mixes levels.
  std::vector<RawRow> rows = {
      {3, 1, "s1", "1"}, {5, 1, "s1", "1"}, {1, 0, "s1", "0"},
      {2, 1, "s2", "0"}, {2, 0, "s2", "0"}, {4, 0, "s2", "0"},
  };
  auto ds = build_dataset(rows, 0.5);
  CHECK_THROWS_AS(validate_for_test(ds, CovariateKind::stratification), Error);
  auto rep = validate_for_test(ds, CovariateKind::additional);
  CHECK_FALSE(rep.assumption5);
}

TEST_CASE("validate_for_test drops single-arm combinations") {
  std::vector<RawRow> rows = {
      {1, 1, "s1", "0"}, {2, 0, "s1", "0"},
      {3, 1, "s2", "1"}, {4, 0, "s2", "1"},
      {5, 1, "s2", "0"},  // (s2, 0) has no control: dropped
  };
  auto ds = build_dataset(rows, 0.5);
  auto rep = validate_for_test(ds, CovariateKind::additional);
  REQUIRE(rep.dropped_cells.size() == 1);
  CHECK(rep.dropped_cells[0].second == 0);
  CHECK(rep.level_testable[0]);
  CHECK(rep.level_testable[1]);
}

TEST_CASE("validate_for_test errors when nothing is testable") {
  std::vector<RawRow> rows = {{1, 1, "s1", "0"}, {2, 1, "s1", "1"}};
  auto ds = build_dataset(rows, 0.5);
  CHECK_THROWS_AS(validate_for_test(ds, CovariateKind::additional), Error);
}
