#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carstat/errors.hpp"

namespace carstat {

// One observed row: outcome, arm, stratum id, covariate level id.
// Ids are dense indexes into TrialDataset's label tables.
struct UnitRecord {
  double y;
  int a;  // 0 or 1
  int s;
  int x;
};

// Row with original labels, as ingested from CSV or user code.
struct RawRow {
  double y;
  int a;
  std::string s;
  std::string x;
};

// Immutable two-arm trial dataset with interned stratum/level labels and all
// cell counts precomputed. Safe for unrestricted concurrent reads.
class TrialDataset {
 public:
  const std::vector<UnitRecord>& units() const { return units_; }
  const std::vector<std::string>& stratum_labels() const { return stratum_labels_; }
  const std::vector<std::string>& level_labels() const { return level_labels_; }
  double pi() const { return pi_; }

  int n() const { return static_cast<int>(units_.size()); }
  int num_strata() const { return static_cast<int>(stratum_labels_.size()); }
  int num_levels() const { return static_cast<int>(level_labels_.size()); }

  int n_s(int s) const { return n_s_[s]; }
  int n_as(int a, int s) const { return n_as_[a][s]; }
  int n_x(int x) const { return n_x_[x]; }
  int n_ax(int a, int x) const { return n_ax_[a][x]; }
  int n_xs(int x, int s) const { return n_xs_[x][s]; }
  int n_axs(int a, int x, int s) const { return n_axs_[a][x][s]; }

  friend TrialDataset build_dataset(const std::vector<RawRow>& rows, double pi);
  friend TrialDataset build_dataset_indexed(std::vector<UnitRecord> units,
                                            std::vector<std::string> stratum_labels,
                                            std::vector<std::string> level_labels, double pi);

 private:
  TrialDataset() = default;
  void index_counts();

  std::vector<UnitRecord> units_;
  std::vector<std::string> stratum_labels_;
  std::vector<std::string> level_labels_;
  double pi_ = 0.5;

  std::vector<int> n_s_;
  std::vector<int> n_as_[2];
  std::vector<int> n_x_;
  std::vector<int> n_ax_[2];
  std::vector<std::vector<int>> n_xs_;
  std::vector<std::vector<int>> n_axs_[2];
};

// Builds a dataset from labeled rows. Labels are interned to dense ids:
// if every distinct label parses as an integer the id order is numeric
// ascending, otherwise lexicographic. Original labels are kept for reporting.
TrialDataset build_dataset(const std::vector<RawRow>& rows, double pi);

// Builds a dataset from pre-interned rows (ids must match the label tables).
TrialDataset build_dataset_indexed(std::vector<UnitRecord> units,
                                   std::vector<std::string> stratum_labels,
                                   std::vector<std::string> level_labels, double pi);

// Mean/second-moment summaries per cell. count == 0 marks an absent cell;
// mean/m2/var are meaningless (zero-filled) there and must not be read.
struct Cell {
  long long count = 0;
  double mean = 0.0;
  double m2 = 0.0;   // mean of Y^2 over the cell
  double var = 0.0;  // plug-in variance, divisor = count
  bool present() const { return count > 0; }
};

// Sample moments for every (a,x), (a,s) and (a,x,s) cell plus empirical
// shares. Computed once per dataset and consumed by estimation/testing.
struct CellStats {
  int n = 0;
  double pi = 0.5;
  int num_levels = 0;
  int num_strata = 0;
  double y_scale = 0.0;  // max |Y|, used for degenerate-variance thresholds

  std::vector<Cell> ax[2];   // [a][x]
  std::vector<Cell> as[2];   // [a][s]
  std::vector<Cell> axs[2];  // [a][x * num_strata + s]

  std::vector<double> p_hat_x;    // n_x / n
  std::vector<double> share_s;    // n(s) / n
  std::vector<double> share_xs;   // n_x(s) / n, x * num_strata + s
  std::vector<int> count_x;       // n_x
  std::vector<int> count_s;       // n(s)
  std::vector<int> count_xs;      // n_x(s)

  const Cell& cell_ax(int a, int x) const { return ax[a][x]; }
  const Cell& cell_as(int a, int s) const { return as[a][s]; }
  const Cell& cell_axs(int a, int x, int s) const { return axs[a][x * num_strata + s]; }
};

CellStats cell_stats(const TrialDataset& ds);

// Per-stratum imbalance D_n(s) = sum_i (A_i - pi) 1{S_i = s}.
std::vector<double> imbalance(const TrialDataset& ds);

enum class CovariateKind { stratification, additional };

// Occupancy report used to decide which (s,x) combinations enter the
// variance-component sums and whether the stratification-covariate formulas
// apply at all.
struct ValidationReport {
  bool assumption5 = false;            // x constant within every stratum
  std::vector<int> stratum_level;      // per stratum: its unique x, or -1 if mixed/empty
  std::vector<std::pair<int, int>> dropped_cells;  // occupied (s,x) with an empty arm
  std::vector<bool> level_testable;    // per level: some (s,x) cell has both arms
  int empty_strata = 0;
};

// Validates occupancy for the requested covariate kind. Throws
// assumption5_violated when kind == stratification and a stratum mixes
// levels; throws no_testable_cell when no level has a two-arm cell.
ValidationReport validate_for_test(const TrialDataset& ds, CovariateKind kind);

}  // namespace carstat
