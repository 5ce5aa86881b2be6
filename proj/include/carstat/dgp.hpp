#pragma once

#include <string>
#include <vector>

#include "carstat/rng.hpp"
#include "carstat/trial_data.hpp"

namespace carstat {

enum class ModelId { B1, B2, B3, C1, C2, C3 };
enum class Hypothesis { null_h, alternative };

const char* model_name(ModelId id);

// Simulation model parameters. Scalar models use beta[0]/gamma[0]/delta[0];
// the three-level linear model (C1) uses two-component beta/gamma/delta.
struct ModelParams {
  ModelId model = ModelId::B1;
  Hypothesis hypothesis = Hypothesis::null_h;
  double mu1 = 0.0, mu0 = 0.0;
  double alpha1 = 0.0;
  double sigma1 = 1.0, sigma0 = 1.0;
  std::vector<double> beta, gamma, delta;

  static ModelParams defaults(ModelId id, Hypothesis h);
  void validate() const;  // throws invalid_params
};

// Which categorized covariates form the randomization strata.
enum class StrataSpec { none, x, w, x_cross_w };

const char* strata_name(StrataSpec s);

// One unit before treatment assignment: both potential outcomes plus the
// categorized covariate levels and the stratum label id per StrataSpec.
struct PotentialUnit {
  double y1;
  double y0;
  int x;  // covariate level id, 0-based
  int w;  // auxiliary covariate level id, 0-based
  int s;  // stratum id per StrataSpec
};

struct Population {
  std::vector<PotentialUnit> units;
  std::vector<std::string> stratum_labels;
  std::vector<std::string> level_labels;
  int num_w_levels = 2;
};

// Draws n i.i.d. units from the model, categorizes covariates and assigns
// stratum labels. Consumes the stream in a fixed per-unit order (covariate
// draws first, then the outcome noise), so populations are bit-reproducible.
Population generate(const ModelParams& params, StrataSpec strata, int n, Rng& rng);

// Forms the observed dataset y_i = a_i y1_i + (1 - a_i) y0_i.
TrialDataset observe(const Population& pop, const std::vector<int>& arms, double pi);

// Minimization margins for a unit: levels on each stratification covariate.
std::vector<int> margins_of(const PotentialUnit& u, StrataSpec strata);
std::vector<int> margin_sizes(const Population& pop, StrataSpec strata);

}  // namespace carstat
