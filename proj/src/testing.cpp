#include "carstat/testing.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "carstat/dist.hpp"
#include "carstat/errors.hpp"

namespace carstat {

const char* test_name(TestId id) {
  switch (id) {
    case TestId::t_usual: return "t_usual";
    case TestId::t_mod: return "t_mod";
    case TestId::t_strat: return "t_strat";
    case TestId::wald_usual: return "wald_usual";
    case TestId::wald_mod: return "wald_mod";
    case TestId::wald_strat: return "wald_strat";
  }
  return "?";
}

std::optional<TestId> test_from_name(const std::string& name) {
  for (TestId id : {TestId::t_usual, TestId::t_mod, TestId::t_strat, TestId::wald_usual,
                    TestId::wald_mod, TestId::wald_strat}) {
    if (name == test_name(id)) return id;
  }
  return std::nullopt;
}

std::vector<double> smw_inverse_apply(const std::vector<double>& diag, double s0sq,
                                      const std::vector<double>& v) {
  if (diag.size() != v.size()) fail(Err::length_mismatch, "diag and v sizes differ");
  if (s0sq < 0.0) fail(Err::out_of_range, "s0sq must be nonnegative");
  const std::size_t k = diag.size();
  double inv_trace = 0.0;  // 1^T D^-1 1
  double proj = 0.0;       // 1^T D^-1 v
  for (std::size_t i = 0; i < k; ++i) {
    if (!(diag[i] > 0.0)) fail(Err::singular_matrix, "nonpositive diagonal entry");
    inv_trace += 1.0 / diag[i];
    proj += v[i] / diag[i];
  }
  double denom = 1.0 + s0sq * inv_trace;
  double scale = s0sq * proj / denom;
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = (v[i] - scale) / diag[i];
  }
  return out;
}

namespace {

constexpr double kCondLimit = 1e12;

// Variance of the binary contrast implied by a 2x2 covariance of tau_hat.
double contrast_variance(const CovMatrix& cov) {
  return cov.m[1][1] + cov.m[0][0] - 2.0 * cov.m[0][1];
}

CovMatrix diag_cov(CovKind kind, const std::vector<double>& diag,
                   const std::vector<char>& retained) {
  CovMatrix cov;
  cov.kind = kind;
  const int X = static_cast<int>(diag.size());
  cov.m.assign(X, std::vector<double>(X, 0.0));
  cov.retained = retained;
  for (int x = 0; x < X; ++x) {
    if (retained[x]) cov.m[x][x] = diag[x];
  }
  return cov;
}

void check_diag(const CovMatrix& cov, double y_scale) {
  const double thr = 1e-12 * y_scale * y_scale;
  for (int x = 0; x < cov.dim(); ++x) {
    if (cov.retained[x] && !(cov.m[x][x] > thr)) {
      fail(Err::degenerate_variance,
           "variance for level '" + std::to_string(x) + "' is numerically zero");
    }
  }
}

TestResult finish_t(TestId id, double t, double alpha, CovMatrix cov, TauEstimate tau,
                    std::vector<std::pair<std::string, double>> terms) {
  TestResult res;
  res.id = id;
  res.statistic = t;
  res.df = std::nullopt;
  res.alpha = alpha;
  res.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(t)));
  res.reject = res.p_value < alpha;
  res.cov_used = std::move(cov);
  res.tau_used = std::move(tau);
  res.variance_terms = std::move(terms);
  return res;
}

}  // namespace

TestResult run_t_test(const TrialDataset& ds, TestVariant variant, CovariateKind kind,
                      const DesignSpec& spec, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(Err::out_of_range, "alpha outside (0,1)");
  spec.validate();
  validate_for_test(ds, kind);
  CellStats cs = cell_stats(ds);
  if (cs.num_levels != 2) {
    fail(Err::not_binary, "t-tests require a binary covariate; got " +
                              std::to_string(cs.num_levels) + " levels");
  }

  TauKind tk = variant == TestVariant::strat ? TauKind::stratified : TauKind::plain;
  TauEstimate tau = tau_hat(cs, tk);
  if (!tau.retained[0] || !tau.retained[1]) {
    fail(Err::missing_cell, "a covariate level lacks the cells the estimator needs");
  }

  CovMatrix cov;
  std::vector<std::pair<std::string, double>> terms;
  const bool use_str = kind == CovariateKind::stratification;
  switch (variant) {
    case TestVariant::usual: {
      cov = cov_matrix(cs, CovKind::hc, spec);
      for (int x = 0; x < 2; ++x) {
        for (int a = 0; a < 2; ++a) {
          const Cell& c = cs.cell_ax(a, x);
          terms.emplace_back("sigma2_" + std::to_string(a) + std::to_string(x) + "/n_" +
                                 std::to_string(a) + std::to_string(x),
                             c.var / static_cast<double>(c.count));
        }
      }
      break;
    }
    case TestVariant::mod: {
      if (use_str) {
        ZetaComponents zc = zeta_components(cs, ZetaFamily::str, spec);
        auto v2 = per_level_variances(cs, zc);
        cov = diag_cov(CovKind::mod, v2, zc.retained);
        check_diag(cov, cs.y_scale);
        terms = {{"v2_1", v2[1]}, {"v2_0", v2[0]},
                 {"zeta_Y_1", zc.y[1]}, {"zeta_A_1", zc.a[1]}, {"zeta_H_1", zc.h[1]},
                 {"zeta_Y_0", zc.y[0]}, {"zeta_A_0", zc.a[0]}, {"zeta_H_0", zc.h[0]}};
      } else {
        cov = cov_matrix(cs, CovKind::mod, spec);
        terms = {{"w2_1", cov.m[1][1]}, {"w2_0", cov.m[0][0]}, {"w_10", cov.m[0][1]}};
      }
      break;
    }
    case TestVariant::strat: {
      if (use_str) {
        ZetaComponents zc = zeta_components(cs, ZetaFamily::str, spec);
        const int X = cs.num_levels;
        std::vector<double> u2(X, 0.0);
        for (int x = 0; x < X; ++x) {
          if (zc.retained[x]) {
            u2[x] = (zc.y[x] + zc.h[x]) / (cs.p_hat_x[x] * cs.p_hat_x[x]);
          }
        }
        cov = diag_cov(CovKind::strat, u2, zc.retained);
        check_diag(cov, cs.y_scale);
        terms = {{"u2_1", u2[1]}, {"u2_0", u2[0]},
                 {"zeta_Y_1", zc.y[1]}, {"zeta_H_1", zc.h[1]},
                 {"zeta_Y_0", zc.y[0]}, {"zeta_H_0", zc.h[0]}};
      } else {
        cov = cov_matrix(cs, CovKind::strat, spec);
        terms = {{"s2_1", cov.m[1][1]}, {"s2_0", cov.m[0][0]}};
      }
      break;
    }
  }

  double var_delta = contrast_variance(cov);
  const double thr = 1e-12 * cs.y_scale * cs.y_scale;
  if (!(var_delta > thr)) {
    fail(Err::degenerate_variance, "contrast variance is numerically zero");
  }
  double t = std::sqrt(static_cast<double>(cs.n)) * tau.delta() / std::sqrt(var_delta);
  terms.emplace_back("delta_hat", tau.delta());
  terms.emplace_back("var_contrast", var_delta);

  TestId id = variant == TestVariant::usual  ? TestId::t_usual
              : variant == TestVariant::mod ? TestId::t_mod
                                            : TestId::t_strat;
  return finish_t(id, t, alpha, std::move(cov), std::move(tau), std::move(terms));
}

TestResult run_wald_test(const TrialDataset& ds, TestVariant variant, const DesignSpec& spec,
                         double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(Err::out_of_range, "alpha outside (0,1)");
  spec.validate();
  validate_for_test(ds, CovariateKind::additional);
  CellStats cs = cell_stats(ds);

  TauKind tk = variant == TestVariant::strat ? TauKind::stratified : TauKind::plain;
  CovKind ck = variant == TestVariant::usual  ? CovKind::hc
               : variant == TestVariant::mod ? CovKind::mod
                                             : CovKind::strat;
  TauEstimate tau = tau_hat(cs, tk);
  CovMatrix cov = cov_matrix(cs, ck, spec);

  // Retained levels shrink the contrast; df follows.
  std::vector<int> keep;
  for (int x = 0; x < cs.num_levels; ++x) {
    if (tau.retained[x] && cov.retained[x]) keep.push_back(x);
  }
  if (keep.empty() || keep[0] != 0) {
    fail(Err::missing_cell, "reference level 0 is not testable");
  }
  const int K = static_cast<int>(keep.size()) - 1;
  if (K < 1) fail(Err::missing_cell, "need at least one non-reference level");

  std::vector<double> contrast(K);
  for (int k = 0; k < K; ++k) contrast[k] = tau.values[keep[k + 1]] - tau.values[keep[0]];

  double quad;  // contrast^T (R Sigma R^T)^-1 contrast
  if (variant == TestVariant::mod) {
    // Dense symmetric solve with a condition guard.
    Eigen::MatrixXd rsr(K, K);
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) {
        rsr(i, j) = cov.m[keep[i + 1]][keep[j + 1]] + cov.m[keep[0]][keep[0]] -
                    cov.m[keep[i + 1]][keep[0]] - cov.m[keep[0]][keep[j + 1]];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(rsr);
    double max_ev = eigs.eigenvalues().maxCoeff();
    double min_ev = eigs.eigenvalues().minCoeff();
    if (!(min_ev > 0.0) || max_ev / min_ev > kCondLimit) {
      fail(Err::singular_matrix, "R Sigma R^T is singular or ill-conditioned");
    }
    Eigen::VectorXd d(K);
    for (int k = 0; k < K; ++k) d(k) = contrast[k];
    Eigen::VectorXd y = eigs.eigenvectors().transpose() * d;
    quad = 0.0;
    for (int k = 0; k < K; ++k) quad += y(k) * y(k) / eigs.eigenvalues()(k);
  } else {
    // Diagonal Sigma: R Sigma R^T = diag(sigma_kk) + sigma_00 11^T.
    std::vector<double> diag(K);
    for (int k = 0; k < K; ++k) diag[k] = cov.m[keep[k + 1]][keep[k + 1]];
    double s0sq = cov.m[keep[0]][keep[0]];
    auto solved = smw_inverse_apply(diag, s0sq, contrast);
    quad = 0.0;
    for (int k = 0; k < K; ++k) quad += contrast[k] * solved[k];
  }

  TestResult res;
  res.id = variant == TestVariant::usual  ? TestId::wald_usual
           : variant == TestVariant::mod ? TestId::wald_mod
                                         : TestId::wald_strat;
  res.statistic = static_cast<double>(cs.n) * quad;
  res.df = K;
  res.alpha = alpha;
  res.p_value = 1.0 - chisq_cdf(res.statistic, K);
  res.reject = res.p_value < alpha;
  res.cov_used = std::move(cov);
  res.tau_used = std::move(tau);
  for (int k = 0; k < K; ++k) {
    res.variance_terms.emplace_back("delta_hat_" + std::to_string(keep[k + 1]), contrast[k]);
  }
  for (int x : keep) {
    res.variance_terms.emplace_back("sigma_" + std::to_string(x) + std::to_string(x),
                                    res.cov_used.m[x][x]);
  }
  return res;
}

}  // namespace carstat
