#include "carstat/trial_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>

#include "carstat/errors.hpp"

namespace carstat {

namespace {

// Compensated (Kahan) accumulator; used wherever the contract pins
// cross-platform agreement at the 1e-12 level.
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

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = v;
  return true;
}

// Interns labels to dense ids: numeric ascending when every label is an
// integer, lexicographic otherwise.
std::vector<std::string> intern_labels(const std::vector<std::string>& seen) {
  std::vector<std::string> uniq = seen;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  bool all_int = true;
  std::vector<std::pair<long long, std::string>> nums;
  nums.reserve(uniq.size());
  for (const auto& s : uniq) {
    long long v;
    if (!parse_int(s, v)) {
      all_int = false;
      break;
    }
    nums.emplace_back(v, s);
  }
  if (all_int) {
    std::sort(nums.begin(), nums.end());
    std::vector<std::string> out;
    out.reserve(nums.size());
    for (auto& [v, s] : nums) out.push_back(s);
    return out;
  }
  return uniq;
}

}  // namespace

void TrialDataset::index_counts() {
  const int S = num_strata();
  const int X = num_levels();
  n_s_.assign(S, 0);
  n_x_.assign(X, 0);
  n_xs_.assign(X, std::vector<int>(S, 0));
  for (int a = 0; a < 2; ++a) {
    n_as_[a].assign(S, 0);
    n_ax_[a].assign(X, 0);
    n_axs_[a].assign(X, std::vector<int>(S, 0));
  }
  for (const auto& u : units_) {
    n_s_[u.s]++;
    n_x_[u.x]++;
    n_xs_[u.x][u.s]++;
    n_as_[u.a][u.s]++;
    n_ax_[u.a][u.x]++;
    n_axs_[u.a][u.x][u.s]++;
  }
}

TrialDataset build_dataset(const std::vector<RawRow>& rows, double pi) {
  if (rows.empty()) fail(Err::empty_input, "no rows");
  if (!(pi > 0.0 && pi < 1.0)) fail(Err::invalid_pi, "pi must lie in (0,1)");

  std::vector<std::string> s_labels, x_labels;
  s_labels.reserve(rows.size());
  x_labels.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.a != 0 && r.a != 1) fail(Err::invalid_arm, "arm must be 0 or 1");
    if (!std::isfinite(r.y)) fail(Err::non_finite_outcome, "outcome is not finite");
    s_labels.push_back(r.s);
    x_labels.push_back(r.x);
  }
  auto s_interned = intern_labels(s_labels);
  auto x_interned = intern_labels(x_labels);
  std::map<std::string, int> s_id, x_id;
  for (int i = 0; i < static_cast<int>(s_interned.size()); ++i) s_id[s_interned[i]] = i;
  for (int i = 0; i < static_cast<int>(x_interned.size()); ++i) x_id[x_interned[i]] = i;

  std::vector<UnitRecord> units;
  units.reserve(rows.size());
  for (const auto& r : rows) {
    units.push_back(UnitRecord{r.y, r.a, s_id[r.s], x_id[r.x]});
  }
  return build_dataset_indexed(std::move(units), std::move(s_interned), std::move(x_interned),
                               pi);
}

TrialDataset build_dataset_indexed(std::vector<UnitRecord> units,
                                   std::vector<std::string> stratum_labels,
                                   std::vector<std::string> level_labels, double pi) {
  if (units.empty()) fail(Err::empty_input, "no rows");
  if (!(pi > 0.0 && pi < 1.0)) fail(Err::invalid_pi, "pi must lie in (0,1)");
  const int S = static_cast<int>(stratum_labels.size());
  const int X = static_cast<int>(level_labels.size());
  for (const auto& u : units) {
    if (u.a != 0 && u.a != 1) fail(Err::invalid_arm, "arm must be 0 or 1");
    if (!std::isfinite(u.y)) fail(Err::non_finite_outcome, "outcome is not finite");
    if (u.s < 0 || u.s >= S) fail(Err::unknown_stratum, "stratum id out of range");
    if (u.x < 0 || u.x >= X) fail(Err::out_of_range, "level id out of range");
  }
  TrialDataset ds;
  ds.units_ = std::move(units);
  ds.stratum_labels_ = std::move(stratum_labels);
  ds.level_labels_ = std::move(level_labels);
  ds.pi_ = pi;
  ds.index_counts();
  return ds;
}

CellStats cell_stats(const TrialDataset& ds) {
  const int S = ds.num_strata();
  const int X = ds.num_levels();
  CellStats cs;
  cs.n = ds.n();
  cs.pi = ds.pi();
  cs.num_levels = X;
  cs.num_strata = S;
  for (int a = 0; a < 2; ++a) {
    cs.ax[a].assign(X, Cell{});
    cs.as[a].assign(S, Cell{});
    cs.axs[a].assign(X * S, Cell{});
  }

  // First pass: counts, sums, sums of squares per cell.
  std::vector<KahanSum> sum_ax[2], sumsq_ax[2], sum_as[2], sum_axs[2];
  for (int a = 0; a < 2; ++a) {
    sum_ax[a].assign(X, KahanSum{});
    sumsq_ax[a].assign(X, KahanSum{});
    sum_as[a].assign(S, KahanSum{});
    sum_axs[a].assign(X * S, KahanSum{});
  }
  double scale = 0.0;
  for (const auto& u : ds.units()) {
    scale = std::max(scale, std::fabs(u.y));
    sum_ax[u.a][u.x].add(u.y);
    sumsq_ax[u.a][u.x].add(u.y * u.y);
    sum_as[u.a][u.s].add(u.y);
    sum_axs[u.a][u.x * S + u.s].add(u.y);
  }
  cs.y_scale = scale;

  for (int a = 0; a < 2; ++a) {
    for (int x = 0; x < X; ++x) {
      Cell& c = cs.ax[a][x];
      c.count = ds.n_ax(a, x);
      if (c.present()) {
        c.mean = sum_ax[a][x].value() / static_cast<double>(c.count);
        c.m2 = sumsq_ax[a][x].value() / static_cast<double>(c.count);
      }
    }
    for (int s = 0; s < S; ++s) {
      Cell& c = cs.as[a][s];
      c.count = ds.n_as(a, s);
      if (c.present()) c.mean = sum_as[a][s].value() / static_cast<double>(c.count);
    }
    for (int x = 0; x < X; ++x) {
      for (int s = 0; s < S; ++s) {
        Cell& c = cs.axs[a][x * S + s];
        c.count = ds.n_axs(a, x, s);
        if (c.present()) c.mean = sum_axs[a][x * S + s].value() / static_cast<double>(c.count);
      }
    }
  }

  // Second pass: plug-in variances about the (a,x) cell means.
  std::vector<KahanSum> dev2[2];
  for (int a = 0; a < 2; ++a) dev2[a].assign(X, KahanSum{});
  for (const auto& u : ds.units()) {
    double d = u.y - cs.ax[u.a][u.x].mean;
    dev2[u.a][u.x].add(d * d);
  }
  for (int a = 0; a < 2; ++a) {
    for (int x = 0; x < X; ++x) {
      Cell& c = cs.ax[a][x];
      if (c.present()) {
        c.var = std::max(0.0, dev2[a][x].value() / static_cast<double>(c.count));
      }
    }
  }

  const double n = static_cast<double>(ds.n());
  cs.p_hat_x.resize(X);
  cs.count_x.resize(X);
  for (int x = 0; x < X; ++x) {
    cs.count_x[x] = ds.n_x(x);
    cs.p_hat_x[x] = ds.n_x(x) / n;
  }
  cs.share_s.resize(S);
  cs.count_s.resize(S);
  for (int s = 0; s < S; ++s) {
    cs.count_s[s] = ds.n_s(s);
    cs.share_s[s] = ds.n_s(s) / n;
  }
  cs.share_xs.resize(X * S);
  cs.count_xs.resize(X * S);
  for (int x = 0; x < X; ++x) {
    for (int s = 0; s < S; ++s) {
      cs.count_xs[x * S + s] = ds.n_xs(x, s);
      cs.share_xs[x * S + s] = ds.n_xs(x, s) / n;
    }
  }
  return cs;
}

std::vector<double> imbalance(const TrialDataset& ds) {
  std::vector<double> d(ds.num_strata());
  for (int s = 0; s < ds.num_strata(); ++s) {
    d[s] = ds.n_as(1, s) - ds.pi() * ds.n_s(s);
  }
  return d;
}

ValidationReport validate_for_test(const TrialDataset& ds, CovariateKind kind) {
  const int S = ds.num_strata();
  const int X = ds.num_levels();
  ValidationReport rep;
  rep.stratum_level.assign(S, -1);
  rep.level_testable.assign(X, false);

  for (int s = 0; s < S; ++s) {
    if (ds.n_s(s) == 0) {
      rep.empty_strata++;
      continue;
    }
    int level = -1;
    bool mixed = false;
    for (int x = 0; x < X; ++x) {
      if (ds.n_xs(x, s) > 0) {
        if (level >= 0) {
          mixed = true;
          break;
        }
        level = x;
      }
    }
    rep.stratum_level[s] = mixed ? -1 : level;
    if (mixed && kind == CovariateKind::stratification) {
      fail(Err::assumption5_violated,
           "stratum '" + ds.stratum_labels()[s] + "' mixes covariate levels");
    }
  }
  rep.assumption5 = true;
  for (int s = 0; s < S; ++s) {
    if (ds.n_s(s) > 0 && rep.stratum_level[s] < 0) rep.assumption5 = false;
  }

  bool any_testable = false;
  for (int x = 0; x < X; ++x) {
    for (int s = 0; s < S; ++s) {
      int n1 = ds.n_axs(1, x, s);
      int n0 = ds.n_axs(0, x, s);
      if (n1 + n0 == 0) continue;  // zero-probability combination, ignored
      if (n1 > 0 && n0 > 0) {
        rep.level_testable[x] = true;
      } else {
        rep.dropped_cells.emplace_back(s, x);
      }
    }
    any_testable = any_testable || rep.level_testable[x];
  }
  if (!any_testable) {
    fail(Err::no_testable_cell, "no covariate level has a two-arm (stratum, level) cell");
  }
  return rep;
}

}  // namespace carstat
