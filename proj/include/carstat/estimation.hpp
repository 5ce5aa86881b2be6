#pragma once

#include <vector>

#include "carstat/randomization.hpp"
#include "carstat/trial_data.hpp"

namespace carstat {

enum class TauKind { plain, stratified };

// Level-wise treatment effect estimates and the contrasts against level 0.
// A level is retained when the cells its estimator needs are occupied
// (plain: both arms at the level; stratified: some two-arm (s,x) cell).
// values/deltas are meaningful for retained levels only.
struct TauEstimate {
  TauKind kind = TauKind::plain;
  std::vector<double> values;   // tau_hat per level
  std::vector<double> deltas;   // values[k] - values[0], k = 1..K
  std::vector<char> retained;   // per level

  double delta() const { return deltas.at(0); }  // binary-x shorthand
};

// tau_hat per level. plain: difference of arm means within the level.
// stratified: n_x(s)/n_x weighted within-(s,x)-cell differences; (s,x) cells
// with an empty arm are excluded and shares are not renormalized.
TauEstimate tau_hat(const CellStats& stats, TauKind kind);

enum class ZetaFamily { str, add, check };

// Variance components per level (and per level pair for the add family).
// Diagonal components are nonnegative by construction.
struct ZetaComponents {
  ZetaFamily family = ZetaFamily::check;
  std::vector<double> y;  // zeta_Y per level
  std::vector<double> a;  // zeta_A per level (empty for check family)
  std::vector<double> h;  // zeta_H per level
  std::vector<char> retained;  // per level: both arms occupied at the level
  // Cross terms, add family only; [x][y], symmetric, diagonal unused.
  std::vector<std::vector<double>> y_xy, a_xy, h_xy;
};

// Plug-in variance-component estimators. str family requires Assumption-5
// strata (validated by the caller); str/add A-components require a known
// q(s) and throw unknown_q otherwise; the check family never needs q.
ZetaComponents zeta_components(const CellStats& stats, ZetaFamily family,
                               const DesignSpec& spec);

enum class CovKind { hc, mod, strat };

// Assembled asymptotic covariance estimate of sqrt(n) * tau_hat over levels.
// Rows/columns of non-retained levels are zero-filled.
struct CovMatrix {
  CovKind kind = CovKind::hc;
  std::vector<std::vector<double>> m;  // (K+1) x (K+1), symmetric
  std::vector<char> retained;
  int dim() const { return static_cast<int>(m.size()); }
};

// hc: diag(n sigma2_{1,x}/n_{1,x} + n sigma2_{0,x}/n_{0,x}).
// mod: w2_x diagonal with w_xy off-diagonals (add family).
// strat: diag(s2_x) (check family).
// Throws degenerate_variance when a diagonal entry is numerically zero
// (below 1e-12 * max|Y|^2) and missing_cell / unknown_q as applicable.
CovMatrix cov_matrix(const CellStats& stats, CovKind kind, const DesignSpec& spec);

// Binary-x variance scalars from a component set:
// per level, (zeta_Y + zeta_A + zeta_H) / p_hat^2 (A term skipped when the
// family carries none). Returns one value per level.
std::vector<double> per_level_variances(const CellStats& stats, const ZetaComponents& zc);

// Cross covariance (p_x p_y)^-1 (zeta_Y,xy + zeta_A,xy + zeta_H,xy), add family.
double cross_covariance(const CellStats& stats, const ZetaComponents& zc, int x, int y);

}  // namespace carstat
