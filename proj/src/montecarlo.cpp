#include "carstat/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "carstat/errors.hpp"

namespace carstat {

namespace {

const char* hypothesis_name(Hypothesis h) {
  return h == Hypothesis::null_h ? "null" : "alternative";
}

std::string canonical_string(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << "model=" << model_name(cfg.model) << ";h=" << hypothesis_name(cfg.hypothesis)
     << ";strata=" << strata_name(cfg.strata)
     << ";kind=" << (cfg.covariate_kind == CovariateKind::stratification ? "strat" : "add")
     << ";design=" << method_name(cfg.design.method) << ";pi=" << cfg.design.pi
     << ";block=" << cfg.design.block_size << ";coin=" << cfg.design.coin_p << ";n=" << cfg.n
     << ";reps=" << cfg.reps << ";alpha=" << cfg.alpha << ";seed=" << cfg.seed << ";tests=";
  for (TestId t : cfg.tests) os << test_name(t) << ",";
  os << ";params=";
  for (const auto& [k, v] : cfg.param_overrides) os << k << "=" << v << ",";
  return os.str();
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double round1_half_away(double v) {
  double scaled = v * 10.0;
  double r = scaled >= 0.0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
  return r / 10.0;
}

std::string fmt_pct1(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", round1_half_away(pct));
  return buf;
}

std::string fmt_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (reps < 1) fail(Err::config_invalid, "reps must be at least 1");
  if (n < 1) fail(Err::config_invalid, "n must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(Err::config_invalid, "alpha outside (0,1)");
  if (tests.empty()) fail(Err::config_invalid, "no tests configured");
  bool x_in_strata = strata == StrataSpec::x || strata == StrataSpec::x_cross_w;
  bool kind_strat = covariate_kind == CovariateKind::stratification;
  if (x_in_strata != kind_strat) {
    fail(Err::config_invalid,
         "covariate_kind must be 'stratification' exactly when X is part of the strata");
  }
  if (design.method == Method::MIN && strata == StrataSpec::none) {
    fail(Err::config_invalid, "minimization needs at least one margin covariate");
  }
  design.validate();
  resolved_params();  // throws config_invalid on bad overrides
}

ModelParams ScenarioConfig::resolved_params() const {
  ModelParams p = ModelParams::defaults(model, hypothesis);
  for (const auto& [key, value] : param_overrides) {
    if (key == "mu1") {
      p.mu1 = value;
    } else if (key == "mu0") {
      p.mu0 = value;
    } else if (key == "alpha1") {
      p.alpha1 = value;
    } else if (key == "sigma1") {
      p.sigma1 = value;
    } else if (key == "sigma0") {
      p.sigma0 = value;
    } else if (key == "beta1") {
      p.beta[0] = value;
    } else if (key == "gamma1") {
      p.gamma[0] = value;
    } else if (key == "delta1") {
      p.delta[0] = value;
    } else if (key == "beta2" || key == "gamma2" || key == "delta2") {
      if (p.beta.size() < 2) {
        fail(Err::config_invalid, "parameter '" + key + "' needs a two-component model");
      }
      (key == "beta2" ? p.beta[1] : key == "gamma2" ? p.gamma[1] : p.delta[1]) = value;
    } else {
      fail(Err::config_invalid, "unknown model parameter '" + key + "'");
    }
  }
  try {
    p.validate();
  } catch (const Error& e) {
    fail(Err::config_invalid, e.what());
  }
  return p;
}

double RejectionReport::mc_se(const TestTally& t) const {
  long long v = valid_reps(t);
  if (v <= 0) return 0.0;
  double p = proportion(t);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(v));
}

RejectionReport run_scenario(const ScenarioConfig& cfg, int worker_budget) {
  cfg.validate();
  const ModelParams params = cfg.resolved_params();
  const int T = static_cast<int>(cfg.tests.size());

  // One replication: stream (seed, r), population draws then assignment.
  auto run_rep = [&](int r, std::vector<long long>& rejects, std::vector<long long>& errors) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(r));
    Population pop = generate(params, cfg.strata, cfg.n, rng);
    std::vector<int> strata_seq(cfg.n);
    for (int i = 0; i < cfg.n; ++i) strata_seq[i] = pop.units[i].s;

    std::vector<int> arms;
    try {
      RandomizerState state(cfg.design, static_cast<int>(pop.stratum_labels.size()),
                            margin_sizes(pop, cfg.strata), rng);
      arms.resize(cfg.n);
      for (int i = 0; i < cfg.n; ++i) {
        std::vector<int> prof = margins_of(pop.units[i], cfg.strata);
        arms[i] = assign_next(state, cfg.design, strata_seq[i],
                              prof.empty() ? nullptr : &prof);
      }
    } catch (const Error&) {
      for (int t = 0; t < T; ++t) errors[t]++;
      return;
    }

    TrialDataset ds = observe(pop, arms, cfg.design.pi);
    for (int t = 0; t < T; ++t) {
      try {
        TestResult res;
        switch (cfg.tests[t]) {
          case TestId::t_usual:
            res = run_t_test(ds, TestVariant::usual, cfg.covariate_kind, cfg.design, cfg.alpha);
            break;
          case TestId::t_mod:
            res = run_t_test(ds, TestVariant::mod, cfg.covariate_kind, cfg.design, cfg.alpha);
            break;
          case TestId::t_strat:
            res = run_t_test(ds, TestVariant::strat, cfg.covariate_kind, cfg.design, cfg.alpha);
            break;
          case TestId::wald_usual:
            res = run_wald_test(ds, TestVariant::usual, cfg.design, cfg.alpha);
            break;
          case TestId::wald_mod:
            res = run_wald_test(ds, TestVariant::mod, cfg.design, cfg.alpha);
            break;
          case TestId::wald_strat:
            res = run_wald_test(ds, TestVariant::strat, cfg.design, cfg.alpha);
            break;
        }
        if (res.reject) rejects[t]++;
      } catch (const Error&) {
        errors[t]++;
      }
    }
  };

  int workers = std::max(1, worker_budget);
  workers = std::min<int>(workers, cfg.reps);
  std::vector<long long> rejects(T, 0), errors(T, 0);
  if (workers == 1) {
    for (int r = 0; r < cfg.reps; ++r) run_rep(r, rejects, errors);
  } else {
    std::atomic<int> next{0};
    std::vector<std::vector<long long>> rej_w(workers, std::vector<long long>(T, 0));
    std::vector<std::vector<long long>> err_w(workers, std::vector<long long>(T, 0));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        int r;
        while ((r = next.fetch_add(1)) < cfg.reps) run_rep(r, rej_w[w], err_w[w]);
      });
    }
    for (auto& th : pool) th.join();
    for (int w = 0; w < workers; ++w) {
      for (int t = 0; t < T; ++t) {
        rejects[t] += rej_w[w][t];
        errors[t] += err_w[w][t];
      }
    }
  }

  RejectionReport rep;
  rep.cfg = cfg;
  rep.config_hash = fnv1a_hex(canonical_string(cfg));
  rep.tallies.resize(T);
  for (int t = 0; t < T; ++t) {
    rep.tallies[t] = TestTally{cfg.tests[t], rejects[t], errors[t]};
  }
  return rep;
}

namespace {

void emit_flat_csv(std::ostringstream& os, const std::vector<RejectionReport>& reports) {
  os << "model,hypothesis,x_stratified,strata,design,test,n,reps,reject_pct,mc_se,seed\n";
  for (const auto& rep : reports) {
    for (const auto& t : rep.tallies) {
      os << model_name(rep.cfg.model) << ',' << hypothesis_name(rep.cfg.hypothesis) << ','
         << (rep.cfg.x_stratified() ? "yes" : "no") << ',' << strata_name(rep.cfg.strata) << ','
         << method_name(rep.cfg.design.method) << ',' << test_name(t.test) << ',' << rep.cfg.n
         << ',' << rep.cfg.reps << ',' << fmt_g6(100.0 * rep.proportion(t)) << ','
         << fmt_g6(100.0 * rep.mc_se(t)) << ',' << rep.cfg.seed << '\n';
    }
  }
}

void emit_json(std::ostringstream& os, const std::vector<RejectionReport>& reports) {
  os << "{\n  \"schema_version\": 1,\n  \"rows\": [\n";
  bool first = true;
  for (const auto& rep : reports) {
    for (const auto& t : rep.tallies) {
      if (!first) os << ",\n";
      first = false;
      os << "    {\"model\": \"" << model_name(rep.cfg.model) << "\", \"hypothesis\": \""
         << hypothesis_name(rep.cfg.hypothesis) << "\", \"x_stratified\": \""
         << (rep.cfg.x_stratified() ? "yes" : "no") << "\", \"strata\": \""
         << strata_name(rep.cfg.strata) << "\", \"design\": \""
         << method_name(rep.cfg.design.method) << "\", \"test\": \"" << test_name(t.test)
         << "\", \"n\": " << rep.cfg.n << ", \"reps\": " << rep.cfg.reps
         << ", \"reject_pct\": " << fmt_g6(100.0 * rep.proportion(t))
         << ", \"mc_se\": " << fmt_g6(100.0 * rep.mc_se(t)) << ", \"seed\": " << rep.cfg.seed
         << ", \"errors\": " << t.errors << ", \"config_hash\": \"" << rep.config_hash
         << "\"}";
    }
  }
  os << "\n  ]\n}\n";
}

// Grouped rows in table order: (hypothesis, model, X stratified, S(.)) with
// one "a / b / c" triple per design column.
struct PaperRow {
  std::string hyp, model, xs, strata;
  std::map<Method, std::string> cells;
};

struct PaperTable {
  std::vector<Method> methods;
  std::vector<PaperRow> rows;
};

PaperTable group_paper(const std::vector<RejectionReport>& reports) {
  PaperTable tab;
  for (const auto& rep : reports) {
    if (std::find(tab.methods.begin(), tab.methods.end(), rep.cfg.design.method) ==
        tab.methods.end()) {
      tab.methods.push_back(rep.cfg.design.method);
    }
    std::string hyp = hypothesis_name(rep.cfg.hypothesis);
    std::string model = model_name(rep.cfg.model);
    std::string xs = rep.cfg.x_stratified() ? "yes" : "no";
    std::string strata = strata_name(rep.cfg.strata);
    std::string cell;
    for (std::size_t t = 0; t < rep.tallies.size(); ++t) {
      if (t) cell += " / ";
      cell += fmt_pct1(100.0 * rep.proportion(rep.tallies[t]));
    }
    PaperRow* row = nullptr;
    for (auto& r : tab.rows) {
      if (r.hyp == hyp && r.model == model && r.xs == xs && r.strata == strata) {
        row = &r;
        break;
      }
    }
    if (row == nullptr) {
      tab.rows.push_back(PaperRow{hyp, model, xs, strata, {}});
      row = &tab.rows.back();
    }
    row->cells[rep.cfg.design.method] = cell;
  }
  return tab;
}

void emit_paper(std::ostringstream& os, const std::vector<RejectionReport>& reports,
                TableFormat format) {
  PaperTable tab = group_paper(reports);
  auto cell_of = [](const PaperRow& r, Method m) {
    auto it = r.cells.find(m);
    return it == r.cells.end() ? std::string() : it->second;
  };
  switch (format) {
    case TableFormat::markdown: {
      os << "| Hypothesis | Model | X stratified | S(.) |";
      for (Method m : tab.methods) os << ' ' << method_name(m) << " |";
      os << "\n|---|---|---|---|";
      for (std::size_t i = 0; i < tab.methods.size(); ++i) os << "---|";
      os << '\n';
      for (const auto& r : tab.rows) {
        os << "| " << r.hyp << " | " << r.model << " | " << r.xs << " | "
           << (r.strata == "none" ? "--" : r.strata) << " |";
        for (Method m : tab.methods) os << ' ' << cell_of(r, m) << " |";
        os << '\n';
      }
      break;
    }
    case TableFormat::csv: {
      os << "hypothesis,model,x_stratified,strata";
      for (Method m : tab.methods) os << ',' << method_name(m);
      os << '\n';
      for (const auto& r : tab.rows) {
        os << r.hyp << ',' << r.model << ',' << r.xs << ',' << r.strata;
        for (Method m : tab.methods) os << ',' << '"' << cell_of(r, m) << '"';
        os << '\n';
      }
      break;
    }
    case TableFormat::json: {
      os << "{\n  \"schema_version\": 1,\n  \"rows\": [\n";
      for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        const auto& r = tab.rows[i];
        os << "    {\"hypothesis\": \"" << r.hyp << "\", \"model\": \"" << r.model
           << "\", \"x_stratified\": \"" << r.xs << "\", \"strata\": \"" << r.strata << "\"";
        for (Method m : tab.methods) {
          os << ", \"" << method_name(m) << "\": \"" << cell_of(r, m) << "\"";
        }
        os << (i + 1 < tab.rows.size() ? "},\n" : "}\n");
      }
      os << "  ]\n}\n";
    }
  }
}

void emit_flat_markdown(std::ostringstream& os, const std::vector<RejectionReport>& reports) {
  os << "| model | hypothesis | x_stratified | strata | design | test | n | reps | "
        "reject_pct | mc_se | seed |\n";
  os << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& rep : reports) {
    for (const auto& t : rep.tallies) {
      os << "| " << model_name(rep.cfg.model) << " | " << hypothesis_name(rep.cfg.hypothesis)
         << " | " << (rep.cfg.x_stratified() ? "yes" : "no") << " | "
         << strata_name(rep.cfg.strata) << " | " << method_name(rep.cfg.design.method) << " | "
         << test_name(t.test) << " | " << rep.cfg.n << " | " << rep.cfg.reps << " | "
         << fmt_pct1(100.0 * rep.proportion(t)) << " | " << fmt_g6(100.0 * rep.mc_se(t))
         << " | " << rep.cfg.seed << " |\n";
    }
  }
}

}  // namespace

std::string emit_table(const std::vector<RejectionReport>& reports, TableLayout layout,
                       TableFormat format) {
  if (reports.empty()) fail(Err::empty_input, "no reports");
  std::ostringstream os;
  if (layout == TableLayout::paper) {
    emit_paper(os, reports, format);
  } else if (format == TableFormat::json) {
    emit_json(os, reports);
  } else if (format == TableFormat::csv) {
    emit_flat_csv(os, reports);
  } else {
    emit_flat_markdown(os, reports);
  }
  return os.str();
}

}  // namespace carstat
