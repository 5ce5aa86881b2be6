#include "carstat/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "carstat/errors.hpp"

namespace carstat {

const char* model_name(ModelId id) {
  switch (id) {
    case ModelId::B1: return "B1";
    case ModelId::B2: return "B2";
    case ModelId::B3: return "B3";
    case ModelId::C1: return "C1";
    case ModelId::C2: return "C2";
    case ModelId::C3: return "C3";
  }
  return "?";
}

const char* strata_name(StrataSpec s) {
  switch (s) {
    case StrataSpec::none: return "none";
    case StrataSpec::x: return "X";
    case StrataSpec::w: return "W";
    case StrataSpec::x_cross_w: return "XxW";
  }
  return "?";
}

ModelParams ModelParams::defaults(ModelId id, Hypothesis h) {
  ModelParams p;
  p.model = id;
  p.hypothesis = h;
  const bool alt = h == Hypothesis::alternative;
  switch (id) {
    case ModelId::B1:
      p.mu1 = 4.0; p.mu0 = 1.0; p.alpha1 = -2.0; p.sigma1 = 1.0; p.sigma0 = 0.5;
      p.beta = {3.0}; p.gamma = {4.0}; p.delta = {alt ? 1.5 : 0.0};
      break;
    case ModelId::B2:
      p.mu1 = 5.0; p.mu0 = 4.0; p.alpha1 = 2.0; p.sigma1 = 1.0; p.sigma0 = 0.5;
      p.beta = {0.5}; p.gamma = {6.0}; p.delta = {alt ? 1.2 : 0.0};
      break;
    case ModelId::B3:
      p.mu1 = 4.0; p.mu0 = 4.0; p.alpha1 = -3.0; p.sigma1 = 1.0; p.sigma0 = 1.0;
      p.beta = {1.0}; p.gamma = {6.0}; p.delta = {alt ? 1.5 : 0.0};
      break;
    case ModelId::C1:
      p.mu1 = 4.0; p.mu0 = 1.0; p.alpha1 = -2.0; p.sigma1 = 1.0; p.sigma0 = 0.5;
      p.beta = {3.0, 2.0}; p.gamma = {4.0, 3.0};
      p.delta = alt ? std::vector<double>{1.0, 2.0} : std::vector<double>{0.0, 0.0};
      break;
    case ModelId::C2:
      p.mu1 = 5.0; p.mu0 = 4.0; p.alpha1 = 2.0; p.sigma1 = 1.0; p.sigma0 = 0.5;
      p.beta = {0.5}; p.gamma = {6.0}; p.delta = {alt ? 0.4 : 0.0};
      break;
    case ModelId::C3:
      p.mu1 = 4.0; p.mu0 = 4.0; p.alpha1 = -3.0; p.sigma1 = 1.0; p.sigma0 = 1.0;
      p.beta = {1.0}; p.gamma = {6.0}; p.delta = {alt ? 1.5 : 0.0};
      break;
  }
  return p;
}

void ModelParams::validate() const {
  if (!(sigma1 > 0.0) || !(sigma0 > 0.0)) fail(Err::invalid_params, "sigma must be positive");
  std::size_t want = model == ModelId::C1 ? 2 : 1;
  if (beta.size() != want || gamma.size() != want || delta.size() != want) {
    fail(Err::invalid_params, "beta/gamma/delta have the wrong length for the model");
  }
}

namespace {

int stratum_of(StrataSpec spec, int x, int w, int w_levels) {
  switch (spec) {
    case StrataSpec::none: return 0;
    case StrataSpec::x: return x;
    case StrataSpec::w: return w;
    case StrataSpec::x_cross_w: return x * w_levels + w;
  }
  return 0;
}

std::vector<std::string> stratum_labels(StrataSpec spec, const std::vector<std::string>& xl,
                                        const std::vector<std::string>& wl) {
  switch (spec) {
    case StrataSpec::none:
      return {"all"};
    case StrataSpec::x:
      return xl;
    case StrataSpec::w: {
      std::vector<std::string> out;
      for (const auto& w : wl) out.push_back("w" + w);
      return out;
    }
    case StrataSpec::x_cross_w: {
      std::vector<std::string> out;
      for (const auto& x : xl) {
        for (const auto& w : wl) out.push_back("x" + x + ".w" + w);
      }
      return out;
    }
  }
  return {"all"};
}

}  // namespace

Population generate(const ModelParams& params, StrataSpec strata, int n, Rng& rng) {
  if (n < 1) fail(Err::invalid_params, "n must be at least 1");
  params.validate();

  Population pop;
  pop.units.reserve(n);
  const ModelId id = params.model;

  switch (id) {
    case ModelId::B1:
    case ModelId::C1:
      pop.level_labels = id == ModelId::B1 ? std::vector<std::string>{"0", "1"}
                                           : std::vector<std::string>{"0", "1", "2"};
      pop.num_w_levels = 2;
      break;
    case ModelId::B2:
      pop.level_labels = {"0", "1"};
      pop.num_w_levels = 2;
      break;
    case ModelId::C2:
      pop.level_labels = {"0", "1", "2"};
      pop.num_w_levels = 2;
      break;
    case ModelId::B3:
      pop.level_labels = {"0", "1"};
      pop.num_w_levels = 2;
      break;
    case ModelId::C3:
      pop.level_labels = {"0", "0.5", "1"};
      pop.num_w_levels = 2;
      break;
  }
  std::vector<std::string> w_labels =
      (id == ModelId::B3 || id == ModelId::C3) ? std::vector<std::string>{"-1", "1"}
                                               : std::vector<std::string>{"0", "1"};
  pop.stratum_labels = stratum_labels(strata, pop.level_labels, w_labels);

  // Per-unit draw order is fixed: covariate draw(s) first, then W, then the
  // two outcome disturbances.
  for (int i = 0; i < n; ++i) {
    PotentialUnit u{};
    switch (id) {
      case ModelId::B1: {
        int x = rng.next_double() < 0.5 ? 1 : 0;
        double wstar = 3.0 * rng.next_normal();
        double e1 = rng.next_normal();
        double e0 = rng.next_normal();
        int w = wstar > 0.0 ? 1 : 0;
        double b = params.beta[0], g = params.gamma[0], d = params.delta[0];
        u.y1 = params.mu1 + (b + d) * x + params.alpha1 * wstar + g * x * wstar +
               params.sigma1 * e1;
        u.y0 = params.mu0 + b * x + params.alpha1 * wstar + params.sigma0 * e0;
        u.x = x;
        u.w = w;
        break;
      }
      case ModelId::B2:
      case ModelId::C2: {
        double xstar = id == ModelId::B2 ? rng.next_range(-1.0, 1.0) : rng.next_range(-1.0, 2.0);
        double wstar = 2.0 * rng.next_normal();
        double e1 = rng.next_normal();
        double e0 = rng.next_normal();
        int x;
        if (id == ModelId::B2) {
          x = xstar > 0.0 ? 1 : 0;
        } else {
          x = xstar < 0.0 ? 0 : (xstar < 1.0 ? 1 : 2);
        }
        int w = wstar > 0.0 ? 1 : 0;
        double b = params.beta[0], g = params.gamma[0], d = params.delta[0];
        double s1 = params.sigma1 * std::exp(0.5 * xstar);
        double s0 = params.sigma0 * std::exp(0.5 * xstar);
        u.y1 = params.mu1 + std::exp((b + d) * xstar) + params.alpha1 * wstar +
               g * xstar * wstar + s1 * e1;
        u.y0 = params.mu0 + std::exp(b * xstar) + params.alpha1 * wstar + s0 * e0;
        u.x = x;
        u.w = w;
        break;
      }
      case ModelId::B3:
      case ModelId::C3: {
        double xv;
        int x;
        if (id == ModelId::B3) {
          x = rng.next_double() < 2.0 / 3.0 ? 1 : 0;
          xv = x;
        } else {
          x = static_cast<int>(rng.next_below(3));
          xv = 0.5 * x;  // levels {0, 0.5, 1}
        }
        int w = rng.next_double() < 0.5 ? 1 : 0;
        double wv = w == 1 ? 1.0 : -1.0;
        double u1 = rng.next_range(0.0, 10.0);
        double u0 = rng.next_range(0.0, 10.0);
        double b = params.beta[0], g = params.gamma[0], d = params.delta[0];
        double center = id == ModelId::B3 ? 2.0 / 3.0 : 0.5;
        u.y1 = (params.mu1 + (b + d) * (xv - center) + params.alpha1 * wv + g * xv * wv > u1)
                   ? 1.0
                   : 0.0;
        u.y0 = (params.mu0 + b * (xv - center) + params.alpha1 * wv > u0) ? 1.0 : 0.0;
        u.x = x;
        u.w = w;
        break;
      }
      case ModelId::C1: {
        int x = static_cast<int>(rng.next_below(3));  // dummy patterns (0,0),(1,0),(0,1)
        double wstar = 3.0 * rng.next_normal();
        double e1 = rng.next_normal();
        double e0 = rng.next_normal();
        int w = wstar > 0.0 ? 1 : 0;
        double bx = x == 0 ? 0.0 : params.beta[x - 1];
        double dx = x == 0 ? 0.0 : params.delta[x - 1];
        double gx = x == 0 ? 0.0 : params.gamma[x - 1];
        u.y1 = params.mu1 + bx + dx + params.alpha1 * wstar + gx * wstar + params.sigma1 * e1;
        u.y0 = params.mu0 + bx + params.alpha1 * wstar + params.sigma0 * e0;
        u.x = x;
        u.w = w;
        break;
      }
    }
    u.s = stratum_of(strata, u.x, u.w, pop.num_w_levels);
    pop.units.push_back(u);
  }
  return pop;
}

TrialDataset observe(const Population& pop, const std::vector<int>& arms, double pi) {
  if (pop.units.size() != arms.size()) {
    fail(Err::length_mismatch, "population and assignment lengths differ");
  }
  std::vector<UnitRecord> units;
  units.reserve(pop.units.size());
  for (std::size_t i = 0; i < pop.units.size(); ++i) {
    int a = arms[i];
    if (a != 0 && a != 1) fail(Err::invalid_arm, "arm must be 0 or 1");
    const PotentialUnit& u = pop.units[i];
    units.push_back(UnitRecord{a == 1 ? u.y1 : u.y0, a, u.s, u.x});
  }
  return build_dataset_indexed(std::move(units), pop.stratum_labels, pop.level_labels, pi);
}

std::vector<int> margins_of(const PotentialUnit& u, StrataSpec strata) {
  switch (strata) {
    case StrataSpec::none: return {};
    case StrataSpec::x: return {u.x};
    case StrataSpec::w: return {u.w};
    case StrataSpec::x_cross_w: return {u.x, u.w};
  }
  return {};
}

std::vector<int> margin_sizes(const Population& pop, StrataSpec strata) {
  int x_levels = static_cast<int>(pop.level_labels.size());
  switch (strata) {
    case StrataSpec::none: return {};
    case StrataSpec::x: return {x_levels};
    case StrataSpec::w: return {pop.num_w_levels};
    case StrataSpec::x_cross_w: return {x_levels, pop.num_w_levels};
  }
  return {};
}

}  // namespace carstat
