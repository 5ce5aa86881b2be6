#include "carstat/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "carstat/errors.hpp"

namespace carstat {

namespace {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stratum -> level map under Assumption 5; throws when a stratum mixes levels.
std::vector<int> stratum_level_map(const CellStats& cs) {
  std::vector<int> level(cs.num_strata, -1);
  for (int s = 0; s < cs.num_strata; ++s) {
    for (int x = 0; x < cs.num_levels; ++x) {
      if (cs.count_xs[x * cs.num_strata + s] > 0) {
        if (level[s] >= 0) {
          fail(Err::assumption5_violated, "str family requires a single level per stratum");
        }
        level[s] = x;
      }
    }
  }
  return level;
}

}  // namespace

TauEstimate tau_hat(const CellStats& cs, TauKind kind) {
  const int X = cs.num_levels;
  const int S = cs.num_strata;
  TauEstimate out;
  out.kind = kind;
  out.values.assign(X, kNaN);
  out.retained.assign(X, 0);

  int n_retained = 0;
  for (int x = 0; x < X; ++x) {
    if (kind == TauKind::plain) {
      const Cell& c1 = cs.cell_ax(1, x);
      const Cell& c0 = cs.cell_ax(0, x);
      if (c1.present() && c0.present()) {
        out.values[x] = c1.mean - c0.mean;
        out.retained[x] = 1;
      }
    } else {
      KahanSum acc;
      bool any = false;
      for (int s = 0; s < S; ++s) {
        const Cell& c1 = cs.cell_axs(1, x, s);
        const Cell& c0 = cs.cell_axs(0, x, s);
        if (!c1.present() || !c0.present()) continue;  // dropped combination
        double weight = static_cast<double>(cs.count_xs[x * S + s]) / cs.count_x[x];
        acc.add(weight * (c1.mean - c0.mean));
        any = true;
      }
      if (any) {
        out.values[x] = acc.value();
        out.retained[x] = 1;
      }
    }
    n_retained += out.retained[x];
  }
  if (n_retained == 0) fail(Err::missing_cell, "no level has the cells its estimator needs");

  out.deltas.assign(std::max(0, X - 1), kNaN);
  if (out.retained[0]) {
    for (int k = 1; k < X; ++k) {
      if (out.retained[k]) out.deltas[k - 1] = out.values[k] - out.values[0];
    }
  }
  return out;
}

ZetaComponents zeta_components(const CellStats& cs, ZetaFamily family, const DesignSpec& spec) {
  const int X = cs.num_levels;
  const int S = cs.num_strata;
  const double pi = cs.pi;
  const double inv_pi = 1.0 / pi;
  const double inv_q = 1.0 / (1.0 - pi);

  const bool has_a = family != ZetaFamily::check;
  if (has_a && !spec.q(0).has_value()) {
    fail(Err::unknown_q, "design does not pin q(s); modified-family components unavailable");
  }

  ZetaComponents zc;
  zc.family = family;
  zc.y.assign(X, kNaN);
  zc.h.assign(X, kNaN);
  if (has_a) zc.a.assign(X, kNaN);
  zc.retained.assign(X, 0);
  for (int x = 0; x < X; ++x) {
    zc.retained[x] = cs.cell_ax(1, x).present() && cs.cell_ax(0, x).present();
  }

  if (family == ZetaFamily::str) {
    auto level_of = stratum_level_map(cs);
    for (int x = 0; x < X; ++x) {
      if (!zc.retained[x]) continue;
      const Cell& cx1 = cs.cell_ax(1, x);
      const Cell& cx0 = cs.cell_ax(0, x);
      KahanSum sub1, sub0, a_acc, h_acc;
      for (int s = 0; s < S; ++s) {
        if (level_of[s] != x) continue;
        const Cell& m1 = cs.cell_as(1, s);
        const Cell& m0 = cs.cell_as(0, s);
        if (!m1.present() || !m0.present()) continue;  // dropped combination
        double w_x = static_cast<double>(cs.count_s[s]) / cs.count_x[x];
        double w_n = cs.share_s[s];
        sub1.add(w_x * m1.mean * m1.mean);
        sub0.add(w_x * m0.mean * m0.mean);
        double d1 = m1.mean - cx1.mean;
        double d0 = m0.mean - cx0.mean;
        double q = spec.q(s).value_or(0.0);
        a_acc.add(w_n * q * (inv_pi * d1 + inv_q * d0) * (inv_pi * d1 + inv_q * d0));
        h_acc.add(w_n * (d1 - d0) * (d1 - d0));
      }
      // The plug-in can dip below zero under extreme within-stratum
      // imbalance; the estimand is a nonnegative variance combination.
      zc.y[x] = std::max(
          0.0, cs.p_hat_x[x] * (inv_pi * (cx1.m2 - sub1.value()) + inv_q * (cx0.m2 - sub0.value())));
      zc.a[x] = a_acc.value();
      zc.h[x] = h_acc.value();
    }
    return zc;
  }

  // add / check families work on (s,x) cell means.
  const bool cross = family == ZetaFamily::add;
  if (cross) {
    zc.y_xy.assign(X, std::vector<double>(X, 0.0));
    zc.a_xy.assign(X, std::vector<double>(X, 0.0));
    zc.h_xy.assign(X, std::vector<double>(X, 0.0));
  }

  // Per-(s,x): centered cell-mean deviations, defined when both arms occupied.
  std::vector<char> kept(X * S, 0);
  std::vector<double> d1(X * S, 0.0), d0(X * S, 0.0);
  for (int x = 0; x < X; ++x) {
    if (!zc.retained[x]) continue;
    for (int s = 0; s < S; ++s) {
      const Cell& c1 = cs.cell_axs(1, x, s);
      const Cell& c0 = cs.cell_axs(0, x, s);
      if (!c1.present() || !c0.present()) continue;
      kept[x * S + s] = 1;
      d1[x * S + s] = c1.mean - cs.cell_ax(1, x).mean;
      d0[x * S + s] = c0.mean - cs.cell_ax(0, x).mean;
    }
  }

  for (int x = 0; x < X; ++x) {
    if (!zc.retained[x]) continue;
    KahanSum sub1, sub0, a_acc, h_acc;
    for (int s = 0; s < S; ++s) {
      if (!kept[x * S + s]) continue;
      double share = cs.share_xs[x * S + s];  // n_x(s) / n
      double frac = static_cast<double>(cs.count_xs[x * S + s]) / cs.count_s[s];
      // add: (n(s)/n) (n_x(s)/n(s))^2 = share * frac; check: n_x(s)/n = share.
      double w = family == ZetaFamily::add ? share * frac : share;
      double e1 = d1[x * S + s];
      double e0 = d0[x * S + s];
      sub1.add(w * e1 * e1);
      sub0.add(w * e0 * e0);
      if (has_a) {
        double q = spec.q(s).value_or(0.0);
        double lin = inv_pi * e1 + inv_q * e0;
        a_acc.add(w * q * lin * lin);
      }
      h_acc.add(w * (e1 - e0) * (e1 - e0));
    }
    double s1 = cs.cell_ax(1, x).var;
    double s0 = cs.cell_ax(0, x).var;
    zc.y[x] = std::max(0.0, inv_pi * (cs.p_hat_x[x] * s1 - sub1.value()) +
                                inv_q * (cs.p_hat_x[x] * s0 - sub0.value()));
    if (has_a) zc.a[x] = a_acc.value();
    zc.h[x] = h_acc.value();
  }

  if (cross) {
    for (int x = 0; x < X; ++x) {
      for (int y = x + 1; y < X; ++y) {
        if (!zc.retained[x] || !zc.retained[y]) continue;
        KahanSum y_acc, a_acc, h_acc;
        for (int s = 0; s < S; ++s) {
          if (!kept[x * S + s] || !kept[y * S + s]) continue;
          double w = cs.share_s[s] *
                     (static_cast<double>(cs.count_xs[x * S + s]) / cs.count_s[s]) *
                     (static_cast<double>(cs.count_xs[y * S + s]) / cs.count_s[s]);
          double ex1 = d1[x * S + s], ex0 = d0[x * S + s];
          double ey1 = d1[y * S + s], ey0 = d0[y * S + s];
          y_acc.add(-w * (inv_pi * ex1 * ey1 + inv_q * ex0 * ey0));
          double q = spec.q(s).value_or(0.0);
          a_acc.add(w * q * (inv_pi * ex1 + inv_q * ex0) * (inv_pi * ey1 + inv_q * ey0));
          h_acc.add(w * (ex1 - ex0) * (ey1 - ey0));
        }
        zc.y_xy[x][y] = zc.y_xy[y][x] = y_acc.value();
        zc.a_xy[x][y] = zc.a_xy[y][x] = a_acc.value();
        zc.h_xy[x][y] = zc.h_xy[y][x] = h_acc.value();
      }
    }
  }
  return zc;
}

std::vector<double> per_level_variances(const CellStats& cs, const ZetaComponents& zc) {
  const int X = cs.num_levels;
  std::vector<double> v(X, kNaN);
  for (int x = 0; x < X; ++x) {
    if (!zc.retained[x]) continue;
    double p = cs.p_hat_x[x];
    double sum = zc.y[x] + zc.h[x] + (zc.a.empty() ? 0.0 : zc.a[x]);
    v[x] = sum / (p * p);
  }
  return v;
}

double cross_covariance(const CellStats& cs, const ZetaComponents& zc, int x, int y) {
  if (zc.family != ZetaFamily::add) {
    fail(Err::invalid_params, "cross covariance is defined for the add family only");
  }
  double pxy = cs.p_hat_x[x] * cs.p_hat_x[y];
  return (zc.y_xy[x][y] + zc.a_xy[x][y] + zc.h_xy[x][y]) / pxy;
}

CovMatrix cov_matrix(const CellStats& cs, CovKind kind, const DesignSpec& spec) {
  const int X = cs.num_levels;
  CovMatrix cov;
  cov.kind = kind;
  cov.m.assign(X, std::vector<double>(X, 0.0));
  cov.retained.assign(X, 0);

  if (kind == CovKind::hc) {
    for (int x = 0; x < X; ++x) {
      const Cell& c1 = cs.cell_ax(1, x);
      const Cell& c0 = cs.cell_ax(0, x);
      if (!c1.present() || !c0.present()) continue;
      cov.retained[x] = 1;
      cov.m[x][x] = cs.n * c1.var / static_cast<double>(c1.count) +
                    cs.n * c0.var / static_cast<double>(c0.count);
    }
  } else {
    ZetaFamily family = kind == CovKind::mod ? ZetaFamily::add : ZetaFamily::check;
    ZetaComponents zc = zeta_components(cs, family, spec);
    auto diag = per_level_variances(cs, zc);
    for (int x = 0; x < X; ++x) {
      if (!zc.retained[x]) continue;
      cov.retained[x] = 1;
      cov.m[x][x] = diag[x];
    }
    if (kind == CovKind::mod) {
      for (int x = 0; x < X; ++x) {
        for (int y = x + 1; y < X; ++y) {
          if (!cov.retained[x] || !cov.retained[y]) continue;
          cov.m[x][y] = cov.m[y][x] = cross_covariance(cs, zc, x, y);
        }
      }
    }
  }

  bool any = false;
  const double thr = 1e-12 * cs.y_scale * cs.y_scale;
  for (int x = 0; x < X; ++x) {
    if (!cov.retained[x]) continue;
    any = true;
    if (!(cov.m[x][x] > thr)) {
      fail(Err::degenerate_variance,
           "variance for level '" + std::to_string(x) + "' is numerically zero");
    }
  }
  if (!any) fail(Err::missing_cell, "no level has an occupied two-arm cell");
  return cov;
}

}  // namespace carstat
