#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "carstat/dgp.hpp"
#include "carstat/randomization.hpp"
#include "carstat/testing.hpp"

namespace carstat {

// One table cell: model x hypothesis x stratification x design x tests.
struct ScenarioConfig {
  ModelId model = ModelId::B1;
  Hypothesis hypothesis = Hypothesis::null_h;
  std::map<std::string, double> param_overrides;  // e.g. {"delta1", 1.5}
  StrataSpec strata = StrataSpec::none;
  CovariateKind covariate_kind = CovariateKind::additional;
  DesignSpec design;
  int n = 800;
  int reps = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::vector<TestId> tests;

  void validate() const;  // throws config_invalid
  ModelParams resolved_params() const;
  bool x_stratified() const {
    return strata == StrataSpec::x || strata == StrataSpec::x_cross_w;
  }
};

struct TestTally {
  TestId test;
  long long rejects = 0;
  long long errors = 0;
};

// Rejection counts per test for one scenario, with provenance.
struct RejectionReport {
  ScenarioConfig cfg;
  std::vector<TestTally> tallies;
  std::string config_hash;

  long long valid_reps(const TestTally& t) const { return cfg.reps - t.errors; }
  double proportion(const TestTally& t) const {
    long long v = valid_reps(t);
    return v > 0 ? static_cast<double>(t.rejects) / static_cast<double>(v) : 0.0;
  }
  double mc_se(const TestTally& t) const;  // sqrt(p(1-p)/valid_reps)
};

// Runs all replications of one scenario. Replication r draws from stream
// (seed, r): population first, then assignment. Tallies are integer sums,
// so the report is identical for any worker_budget.
RejectionReport run_scenario(const ScenarioConfig& cfg, int worker_budget);

enum class TableLayout { paper, flat };
enum class TableFormat { csv, json, markdown };

// Renders reports. paper layout groups (hypothesis, model, X-stratified,
// strata) rows with one "a / b / c" percentage triple per design column;
// flat layout is one row per (cell, test).
std::string emit_table(const std::vector<RejectionReport>& reports, TableLayout layout,
                       TableFormat format);

}  // namespace carstat
