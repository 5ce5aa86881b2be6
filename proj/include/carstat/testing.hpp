#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carstat/estimation.hpp"
#include "carstat/randomization.hpp"
#include "carstat/trial_data.hpp"

namespace carstat {

enum class TestId { t_usual, t_mod, t_strat, wald_usual, wald_mod, wald_strat };
enum class TestVariant { usual, mod, strat };

const char* test_name(TestId id);
std::optional<TestId> test_from_name(const std::string& name);

struct TestResult {
  TestId id;
  double statistic = 0.0;
  std::optional<int> df;  // Wald only
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  CovMatrix cov_used;
  TauEstimate tau_used;
  // Named variance decomposition for reporting (denominator pieces).
  std::vector<std::pair<std::string, double>> variance_terms;
};

// Applies (diag(d) + s0sq * 11^T)^-1 to v via Sherman-Morrison without
// forming the inverse. Requires d_k > 0 and s0sq >= 0.
std::vector<double> smw_inverse_apply(const std::vector<double>& diag, double s0sq,
                                      const std::vector<double>& v);

// Interaction t-tests for binary x. variant=mod needs a known q(s);
// covariate_kind=stratification requires Assumption 5 (str-family formulas),
// otherwise the add/check families are used. Two-sided normal reference.
TestResult run_t_test(const TrialDataset& ds, TestVariant variant, CovariateKind kind,
                      const DesignSpec& spec, double alpha);

// Interaction Wald tests for categorical x with reference level 0.
// W = n (R tau)^T (R Sigma R^T)^-1 (R tau), chi-squared reference with
// df = number of retained non-reference levels.
TestResult run_wald_test(const TrialDataset& ds, TestVariant variant, const DesignSpec& spec,
                         double alpha);

}  // namespace carstat
