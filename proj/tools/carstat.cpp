// carstat: covariate-adaptive randomization toolkit.
//   simulate   run Monte Carlo rejection-probability grids from a JSON config
//   analyze    run interaction tests on a trial CSV
//   randomize  generate a treatment-assignment column for a covariate CSV

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "carstat/montecarlo.hpp"

using json = nlohmann::json;
using namespace carstat;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitInvalidTest = 4;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& msg) { throw CliError{code, msg}; }

// ---------------------------------------------------------------------------
// CSV

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    die(kExitConfig, "column '" + name + "' not found in CSV header");
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) die(kExitConfig, "cannot open '" + path + "'");
  Csv csv;
  std::string line;
  if (!std::getline(in, line)) die(kExitConfig, "'" + path + "' is empty");
  csv.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != csv.header.size()) {
      die(kExitConfig, path + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(csv.header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    csv.rows.push_back(std::move(fields));
  }
  if (csv.rows.empty()) die(kExitConfig, "'" + path + "' has no data rows");
  return csv;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    die(kExitConfig, "cannot parse " + what + " value '" + s + "'");
  }
}

int parse_arm(const std::string& s) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  die(kExitConfig, "arm column must contain 0 or 1, got '" + s + "'");
}

std::string join_labels(const std::vector<std::string>& parts) {
  if (parts.empty()) return "all";
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '|';
    out += parts[i];
  }
  return out;
}

Method method_from(const std::string& name) {
  if (name == "sr" || name == "SR") return Method::SR;
  if (name == "sbr" || name == "SBR") return Method::SBR;
  if (name == "sbcd" || name == "SBCD") return Method::SBCD;
  if (name == "min" || name == "MIN") return Method::MIN;
  die(kExitConfig, "unknown design '" + name + "'");
}

int env_workers() {
  const char* env = std::getenv("CARSTAT_WORKERS");
  if (env != nullptr) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string fmt_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) die(kExitRuntime, "cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// simulate

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || it.key() == k;
    if (!ok) die(kExitConfig, where + ": unknown key '" + it.key() + "'");
  }
}

ModelId model_from(const std::string& name) {
  for (ModelId id : {ModelId::B1, ModelId::B2, ModelId::B3, ModelId::C1, ModelId::C2,
                     ModelId::C3}) {
    if (name == model_name(id)) return id;
  }
  die(kExitConfig, "unknown model '" + name + "'");
}

StrataSpec strata_from(const std::string& name) {
  for (StrataSpec s : {StrataSpec::none, StrataSpec::x, StrataSpec::w, StrataSpec::x_cross_w}) {
    if (name == strata_name(s)) return s;
  }
  die(kExitConfig, "unknown strata spec '" + name + "' (expect none, X, W or XxW)");
}

// One scenario = defaults overlaid with the scenario object.
ScenarioConfig scenario_from(const json& defaults, const json& entry, int index,
                             std::optional<int> reps_override,
                             std::optional<std::uint64_t> seed_override) {
  const std::vector<std::string> keys = {
      "model", "hypothesis", "strata", "covariate_kind", "design", "pi",
      "block_size", "coin_p", "n", "reps", "alpha", "seed", "tests", "params"};
  check_keys(entry, keys, "scenario " + std::to_string(index));

  auto pick = [&](const char* key) -> json {
    if (entry.contains(key)) return entry.at(key);
    if (defaults.contains(key)) return defaults.at(key);
    return json();
  };
  auto need = [&](const char* key) -> json {
    json v = pick(key);
    if (v.is_null()) {
      die(kExitConfig, "scenario " + std::to_string(index) + ": missing '" + key + "'");
    }
    return v;
  };

  ScenarioConfig cfg;
  cfg.model = model_from(need("model").get<std::string>());
  std::string hyp = need("hypothesis").get<std::string>();
  if (hyp == "null") {
    cfg.hypothesis = Hypothesis::null_h;
  } else if (hyp == "alternative") {
    cfg.hypothesis = Hypothesis::alternative;
  } else {
    die(kExitConfig, "hypothesis must be 'null' or 'alternative', got '" + hyp + "'");
  }
  cfg.strata = strata_from(need("strata").get<std::string>());
  json kind = pick("covariate_kind");
  if (kind.is_null()) {
    cfg.covariate_kind = (cfg.strata == StrataSpec::x || cfg.strata == StrataSpec::x_cross_w)
                             ? CovariateKind::stratification
                             : CovariateKind::additional;
  } else {
    std::string k = kind.get<std::string>();
    if (k == "stratification") {
      cfg.covariate_kind = CovariateKind::stratification;
    } else if (k == "additional") {
      cfg.covariate_kind = CovariateKind::additional;
    } else {
      die(kExitConfig, "covariate_kind must be 'stratification' or 'additional'");
    }
  }
  cfg.design.method = method_from(need("design").get<std::string>());
  cfg.design.pi = pick("pi").is_null() ? 0.5 : pick("pi").get<double>();
  cfg.design.block_size = pick("block_size").is_null() ? 6 : pick("block_size").get<int>();
  cfg.design.coin_p = pick("coin_p").is_null() ? 0.75 : pick("coin_p").get<double>();
  cfg.n = pick("n").is_null() ? 800 : pick("n").get<int>();
  cfg.reps = reps_override ? *reps_override
                           : (pick("reps").is_null() ? 10000 : pick("reps").get<int>());
  cfg.alpha = pick("alpha").is_null() ? 0.05 : pick("alpha").get<double>();
  std::uint64_t base_seed = seed_override
                                ? *seed_override
                                : (pick("seed").is_null() ? 20260810ULL
                                                          : pick("seed").get<std::uint64_t>());
  // Scenario i without an explicit seed runs at base seed + i.
  cfg.seed = entry.contains("seed") && !seed_override ? entry.at("seed").get<std::uint64_t>()
                                                      : base_seed + index;

  json tests = need("tests");
  if (!tests.is_array() || tests.empty()) die(kExitConfig, "'tests' must be a nonempty array");
  for (const auto& t : tests) {
    auto id = test_from_name(t.get<std::string>());
    if (!id) die(kExitConfig, "unknown test '" + t.get<std::string>() + "'");
    cfg.tests.push_back(*id);
  }
  json params = pick("params");
  if (!params.is_null()) {
    for (auto it = params.begin(); it != params.end(); ++it) {
      if (!it.value().is_number()) {
        die(kExitConfig, "params." + it.key() + " must be numeric");
      }
      cfg.param_overrides[it.key()] = it.value().get<double>();
    }
  }
  try {
    cfg.validate();
  } catch (const carstat::Error& e) {
    die(kExitConfig, "scenario " + std::to_string(index) + ": " + e.what());
  }
  return cfg;
}

int cmd_simulate(const std::string& config_path, std::optional<int> reps,
                 std::optional<std::uint64_t> seed, std::optional<int> workers,
                 const std::string& out_path, const std::string& format,
                 const std::string& layout) {
  std::ifstream in(config_path);
  if (!in) die(kExitConfig, "cannot open config '" + config_path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    die(kExitConfig, std::string("config parse error: ") + e.what());
  }
  check_keys(root, {"schema_version", "defaults", "scenarios"}, "config");
  if (!root.contains("schema_version") || root.at("schema_version").get<int>() != 1) {
    die(kExitConfig, "config requires \"schema_version\": 1");
  }
  json defaults = root.value("defaults", json::object());
  check_keys(defaults,
             {"model", "hypothesis", "strata", "covariate_kind", "design", "pi", "block_size",
              "coin_p", "n", "reps", "alpha", "seed", "tests", "params"},
             "defaults");
  if (!root.contains("scenarios") || !root.at("scenarios").is_array() ||
      root.at("scenarios").empty()) {
    die(kExitConfig, "config needs a nonempty 'scenarios' array");
  }

  std::vector<ScenarioConfig> cfgs;
  int index = 0;
  for (const auto& entry : root.at("scenarios")) {
    cfgs.push_back(scenario_from(defaults, entry, index++, reps, seed));
  }

  int budget = workers ? *workers : env_workers();
  std::vector<RejectionReport> reports;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const auto& cfg = cfgs[i];
    std::fprintf(stderr, "cell %zu/%zu: %s %s strata=%s %s n=%d reps=%d seed=%llu\n", i + 1,
                 cfgs.size(), model_name(cfg.model),
                 cfg.hypothesis == Hypothesis::null_h ? "null" : "alternative",
                 strata_name(cfg.strata), method_name(cfg.design.method), cfg.n, cfg.reps,
                 static_cast<unsigned long long>(cfg.seed));
    reports.push_back(run_scenario(cfg, budget));
  }

  TableFormat fmt;
  if (format == "csv") {
    fmt = TableFormat::csv;
  } else if (format == "json") {
    fmt = TableFormat::json;
  } else if (format == "markdown") {
    fmt = TableFormat::markdown;
  } else {
    die(kExitConfig, "format must be csv, json or markdown");
  }
  TableLayout lay;
  if (layout == "flat") {
    lay = TableLayout::flat;
  } else if (layout == "paper") {
    lay = TableLayout::paper;
  } else {
    die(kExitConfig, "layout must be flat or paper");
  }
  write_output(out_path, emit_table(reports, lay, fmt));
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const std::string& data_path, const std::string& covariate,
                const std::string& strata_arg, const std::string& design,
                double pi, double alpha, int block, double coin, const std::string& tests_arg) {
  Csv csv = read_csv(data_path);
  int y_col = csv.column("y");
  int a_col = csv.column("a");
  int x_col = csv.column(covariate);
  std::vector<int> strata_cols;
  for (const auto& name : split_list(strata_arg)) strata_cols.push_back(csv.column(name));

  std::vector<RawRow> rows;
  rows.reserve(csv.rows.size());
  for (const auto& r : csv.rows) {
    std::vector<std::string> parts;
    for (int c : strata_cols) parts.push_back(r[c]);
    rows.push_back({parse_double(r[y_col], "y"), parse_arm(r[a_col]), join_labels(parts),
                    r[x_col]});
  }
  if (!(pi > 0.0 && pi < 1.0)) die(kExitConfig, "--pi must lie in (0,1)");
  TrialDataset ds = build_dataset(rows, pi);
  if (ds.num_levels() < 2) {
    die(kExitConfig, "covariate '" + covariate + "' has a single level; no contrast to test");
  }

  DesignSpec spec;
  spec.method = method_from(design);
  spec.pi = pi;
  spec.block_size = block;
  spec.coin_p = coin;
  try {
    spec.validate();
  } catch (const carstat::Error& e) {
    die(kExitConfig, e.what());
  }

  // Assumption 5 auto-detection decides which family of formulas applies.
  CovariateKind kind = CovariateKind::additional;
  try {
    auto rep = validate_for_test(ds, CovariateKind::stratification);
    if (rep.assumption5) kind = CovariateKind::stratification;
  } catch (const carstat::Error& e) {
    if (e.code() != Err::assumption5_violated) throw;
  }
  auto occupancy = validate_for_test(ds, kind);

  std::vector<TestId> tests;
  if (tests_arg.empty()) {
    if (ds.num_levels() == 2) {
      tests = {TestId::t_usual, TestId::t_mod, TestId::t_strat};
    } else {
      tests = {TestId::wald_usual, TestId::wald_mod, TestId::wald_strat};
    }
  } else {
    for (const auto& name : split_list(tests_arg)) {
      auto id = test_from_name(name);
      if (!id) die(kExitConfig, "unknown test '" + name + "'");
      tests.push_back(*id);
    }
  }

  std::printf("data: %s  n=%d  design=%s  pi=%s  alpha=%s\n", data_path.c_str(), ds.n(),
              method_name(spec.method), fmt_g6(pi).c_str(), fmt_g6(alpha).c_str());
  std::printf("covariate: %s  levels=%d  treated-as=%s\n", covariate.c_str(),
              ds.num_levels(),
              kind == CovariateKind::stratification ? "stratification (Assumption 5 holds)"
                                                    : "additional");
  std::printf("strata: %s  count=%d  dropped-cells=%zu  empty-strata=%d\n",
              strata_arg.empty() ? "(none)" : strata_arg.c_str(), ds.num_strata(),
              occupancy.dropped_cells.size(), occupancy.empty_strata);
  std::printf("\n%-12s %-14s %-4s %-14s %-12s %s\n", "test", "statistic", "df", "p-value",
              "p(pp)", "reject");

  bool any_invalid = false;
  for (TestId id : tests) {
    try {
      TestResult res;
      switch (id) {
        case TestId::t_usual:
          res = run_t_test(ds, TestVariant::usual, kind, spec, alpha);
          break;
        case TestId::t_mod:
          res = run_t_test(ds, TestVariant::mod, kind, spec, alpha);
          break;
        case TestId::t_strat:
          res = run_t_test(ds, TestVariant::strat, kind, spec, alpha);
          break;
        case TestId::wald_usual:
          res = run_wald_test(ds, TestVariant::usual, spec, alpha);
          break;
        case TestId::wald_mod:
          res = run_wald_test(ds, TestVariant::mod, spec, alpha);
          break;
        case TestId::wald_strat:
          res = run_wald_test(ds, TestVariant::strat, spec, alpha);
          break;
      }
      std::printf("%-12s %-14s %-4s %-14s %-12s %s\n", test_name(id),
                  fmt_g6(res.statistic).c_str(),
                  res.df ? std::to_string(*res.df).c_str() : "-",
                  fmt_g6(res.p_value).c_str(), fmt_g6(100.0 * res.p_value).c_str(),
                  res.reject ? "yes" : "no");
      std::string decomp = "    decomposition:";
      for (const auto& [name, value] : res.variance_terms) {
        decomp += " " + name + "=" + fmt_g6(value);
      }
      std::printf("%s\n", decomp.c_str());
    } catch (const carstat::Error& e) {
      any_invalid = true;
      std::printf("%-12s invalid: %s\n", test_name(id), e.what());
    }
  }
  return any_invalid ? kExitInvalidTest : 0;
}

// ---------------------------------------------------------------------------
// randomize

int cmd_randomize(const std::string& cov_path, const std::string& strata_arg,
                  const std::string& method, double pi, int block, double coin,
                  std::uint64_t seed, const std::string& out_path) {
  Csv csv = read_csv(cov_path);
  for (const auto& h : csv.header) {
    if (h == "a") die(kExitConfig, "'" + cov_path + "' already has an 'a' column");
  }
  std::vector<int> strata_cols;
  for (const auto& name : split_list(strata_arg)) strata_cols.push_back(csv.column(name));

  DesignSpec spec;
  spec.method = method_from(method);
  spec.pi = pi;
  spec.block_size = block;
  spec.coin_p = coin;
  if (!(pi > 0.0 && pi < 1.0)) die(kExitConfig, "--pi must lie in (0,1)");
  try {
    spec.validate();
  } catch (const carstat::Error& e) {
    die(kExitConfig, e.what());
  }
  if (spec.method == Method::MIN && strata_cols.empty()) {
    die(kExitConfig, "minimization needs at least one --strata column as a balance margin");
  }

  // Stratum = cross-product of the strata columns; ids in first-appearance
  // order so output is a pure function of (file, flags, seed).
  std::map<std::string, int> stratum_id;
  std::vector<int> strata_seq;
  for (const auto& r : csv.rows) {
    std::vector<std::string> parts;
    for (int c : strata_cols) parts.push_back(r[c]);
    std::string label = join_labels(parts);
    auto [it, inserted] = stratum_id.try_emplace(label, static_cast<int>(stratum_id.size()));
    strata_seq.push_back(it->second);
  }

  // For minimization each strata column is its own balance margin.
  std::vector<std::vector<int>> margins;
  std::vector<std::map<std::string, int>> margin_ids(strata_cols.size());
  if (spec.method == Method::MIN) {
    for (const auto& r : csv.rows) {
      std::vector<int> prof;
      for (std::size_t m = 0; m < strata_cols.size(); ++m) {
        auto [it, inserted] = margin_ids[m].try_emplace(
            r[strata_cols[m]], static_cast<int>(margin_ids[m].size()));
        prof.push_back(it->second);
      }
      margins.push_back(std::move(prof));
    }
  }

  auto arms = assign_all(spec, strata_seq, spec.method == Method::MIN ? &margins : nullptr,
                         static_cast<int>(stratum_id.size()), seed);

  std::ostringstream os;
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    if (i) os << ',';
    os << csv.header[i];
  }
  os << ",a\n";
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    for (std::size_t i = 0; i < csv.rows[r].size(); ++i) {
      if (i) os << ',';
      os << csv.rows[r][i];
    }
    os << ',' << arms[r] << '\n';
  }
  write_output(out_path, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covariate-adaptive randomization toolkit"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run Monte Carlo scenario grids");
  std::string sim_config, sim_out = "-", sim_format = "csv", sim_layout = "flat";
  std::optional<int> sim_reps, sim_workers;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "scenario config (JSON)")->required();
  sim->add_option("--reps", sim_reps, "override replication count for every scenario");
  sim->add_option("--seed", sim_seed, "override base seed");
  sim->add_option("--workers", sim_workers, "worker threads (default: CARSTAT_WORKERS or cores)");
  sim->add_option("--out", sim_out, "output path ('-' for stdout)");
  sim->add_option("--format", sim_format, "csv | json | markdown");
  sim->add_option("--layout", sim_layout, "flat | paper");

  auto* ana = app.add_subcommand("analyze", "interaction tests on a trial CSV");
  std::string ana_data, ana_cov, ana_strata, ana_design = "sr", ana_tests;
  double ana_pi = 0.5, ana_alpha = 0.05, ana_coin = 0.75;
  int ana_block = 6;
  ana->add_option("--data", ana_data, "trial CSV with y and a columns")->required();
  ana->add_option("--covariate", ana_cov, "covariate column under test")->required();
  ana->add_option("--strata", ana_strata, "comma-separated stratification columns");
  ana->add_option("--design", ana_design, "sr | sbr | sbcd | min");
  ana->add_option("--pi", ana_pi, "target treated proportion");
  ana->add_option("--alpha", ana_alpha, "test level");
  ana->add_option("--block", ana_block, "block size (sbr)");
  ana->add_option("--coin", ana_coin, "biased-coin probability (sbcd/min)");
  ana->add_option("--tests", ana_tests, "comma-separated test list (default by level count)");

  auto* rnd = app.add_subcommand("randomize", "append a treatment column to a covariate CSV");
  std::string rnd_cov, rnd_strata, rnd_method = "sbr", rnd_out = "-";
  double rnd_pi = 0.5, rnd_coin = 0.75;
  int rnd_block = 6;
  std::uint64_t rnd_seed = 0;
  rnd->add_option("--covariates", rnd_cov, "covariate CSV")->required();
  rnd->add_option("--strata", rnd_strata, "comma-separated stratification columns");
  rnd->add_option("--method", rnd_method, "sr | sbr | sbcd | min");
  rnd->add_option("--pi", rnd_pi, "target treated proportion");
  rnd->add_option("--block", rnd_block, "block size (sbr)");
  rnd->add_option("--coin", rnd_coin, "biased-coin probability (sbcd/min)");
  rnd->add_option("--seed", rnd_seed, "RNG seed")->required();
  rnd->add_option("--out", rnd_out, "output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_config, sim_reps, sim_seed, sim_workers, sim_out, sim_format,
                          sim_layout);
    }
    if (ana->parsed()) {
      return cmd_analyze(ana_data, ana_cov, ana_strata, ana_design, ana_pi, ana_alpha,
                         ana_block, ana_coin, ana_tests);
    }
    if (rnd->parsed()) {
      return cmd_randomize(rnd_cov, rnd_strata, rnd_method, rnd_pi, rnd_block, rnd_coin,
                           rnd_seed, rnd_out);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  } catch (const carstat::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
