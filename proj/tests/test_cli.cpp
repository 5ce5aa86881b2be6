// CLI integration: each subcommand is a thin adapter over the library, so
// its file output must match calling the library directly.

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "carstat/montecarlo.hpp"

using namespace carstat;
namespace fs = std::filesystem;

namespace {

const char* cli_bin() { return CARSTAT_CLI_BIN; }
const char* config_dir() { return CARSTAT_CONFIG_DIR; }

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("carstat_test_" + name)).string();
}

int run(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("simulate output equals the library result byte for byte") {
  std::string cfg_path = tmp_path("mini.json");
  spit(cfg_path, R"({
  "schema_version": 1,
  "defaults": {"n": 200, "reps": 300, "alpha": 0.05, "pi": 0.5,
               "tests": ["t_usual", "t_mod", "t_strat"]},
  "scenarios": [
    {"model": "B1", "hypothesis": "null", "strata": "XxW",
     "covariate_kind": "stratification", "design": "SBR", "seed": 9}
  ]
})");
  std::string out_path = tmp_path("mini.csv");
  int rc = run(std::string(cli_bin()) + " simulate --config " + cfg_path + " --out " +
               out_path + " --format csv --workers 2 2>/dev/null");
  REQUIRE(rc == 0);

  ScenarioConfig cfg;
  cfg.model = ModelId::B1;
  cfg.hypothesis = Hypothesis::null_h;
  cfg.strata = StrataSpec::x_cross_w;
  cfg.covariate_kind = CovariateKind::stratification;
  cfg.design = DesignSpec{Method::SBR, 0.5, 6, 0.75};
  cfg.n = 200;
  cfg.reps = 300;
  cfg.alpha = 0.05;
  cfg.seed = 9;
  cfg.tests = {TestId::t_usual, TestId::t_mod, TestId::t_strat};
  auto rep = run_scenario(cfg, 2);
  CHECK(slurp(out_path) == emit_table({rep}, TableLayout::flat, TableFormat::csv));
}

TEST_CASE("simulate honors overrides and reps=1 yields 0/1 proportions") {
  std::string cfg_path = tmp_path("mini2.json");
  spit(cfg_path, R"({
  "schema_version": 1,
  "defaults": {"n": 120, "reps": 500, "alpha": 0.05, "pi": 0.5,
               "tests": ["t_usual"]},
  "scenarios": [
    {"model": "B1", "hypothesis": "null", "strata": "W",
     "design": "SR"}
  ]
})");
  std::string out_path = tmp_path("mini2.csv");
  int rc = run(std::string(cli_bin()) + " simulate --config " + cfg_path +
               " --reps 1 --seed 5 --out " + out_path + " --format csv 2>/dev/null");
  REQUIRE(rc == 0);
  auto text = slurp(out_path);
  // reps column reads 1 and the proportion is either 0 or 100.
  CHECK(text.find(",120,1,") != std::string::npos);
  bool zero_or_one = text.find(",1,0,") != std::string::npos ||
                     text.find(",1,100,") != std::string::npos;
  CHECK(zero_or_one);
}

TEST_CASE("simulate rejects malformed configs with exit 2") {
  std::string cfg_path = tmp_path("bad.json");
  spit(cfg_path, R"({"schema_version": 1, "defaults": {}, "scenarios": [
    {"model": "B1", "hypothesis": "null", "strata": "none", "design": "SR",
     "tests": ["t_usual"], "repz": 10}]})");
  int rc = run(std::string(cli_bin()) + " simulate --config " + cfg_path +
               " 2>" + tmp_path("bad.err"));
  CHECK(rc == 2);
  CHECK(slurp(tmp_path("bad.err")).find("repz") != std::string::npos);
}

TEST_CASE("bundled table1 cell reproduces the published value at seed 42") {
  std::string out_path = tmp_path("cell.csv");
  int rc = run(std::string(cli_bin()) + " simulate --config " + std::string(config_dir()) +
               "/table1_cell.json --out " + out_path + " --format csv 2>/dev/null");
  REQUIRE(rc == 0);
  auto text = slurp(out_path);
  // Parse the three reject_pct fields.
  double pct[3];
  int idx = 0;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line) && idx < 3) {
    // ...,reject_pct,mc_se,seed -> third field from the end
    auto last = line.rfind(',');
    auto mid = line.rfind(',', last - 1);
    auto first = line.rfind(',', mid - 1);
    pct[idx++] = std::stod(line.substr(first + 1, mid - first - 1));
  }
  REQUIRE(idx == 3);
  CHECK(std::fabs(pct[0] - 2.2) <= 0.8);
  CHECK(std::fabs(pct[1] - 5.4) <= 0.8);
  CHECK(std::fabs(pct[2] - 5.3) <= 0.8);
}

TEST_CASE("analyze matches the library on the 6-row dataset") {
  std::string data = tmp_path("d0.csv");
  spit(data, "y,a,s,x\n3,1,s1,1\n5,1,s1,1\n1,0,s1,1\n2,1,s2,0\n2,0,s2,0\n4,0,s2,0\n");
  std::string out = tmp_path("d0.out");
  int rc = run(std::string(cli_bin()) + " analyze --data " + data +
               " --covariate x --strata s --design sbr --pi 0.5 --alpha 0.05 "
               "--tests t_usual >" + out);
  CHECK(rc == 0);
  auto text = slurp(out);
  CHECK(text.find("t_usual") != std::string::npos);
  CHECK(text.find("4 ") != std::string::npos);          // statistic
  CHECK(text.find("6.33425e-05") != std::string::npos);  // raw p
  CHECK(text.find("0.00633425") != std::string::npos);   // percentage points
  CHECK(text.find("stratification") != std::string::npos);
}

TEST_CASE("analyze exit codes: unknown q is 4, schema errors are 2") {
  std::string data = tmp_path("d0b.csv");
  spit(data, "y,a,s,x\n3,1,s1,1\n5,1,s1,1\n1,0,s1,1\n2,1,s2,0\n2,0,s2,0\n4,0,s2,0\n");
  int rc4 = run(std::string(cli_bin()) + " analyze --data " + data +
                " --covariate x --strata s --design min --tests t_mod >/dev/null");
  CHECK(rc4 == 4);
  int rc2 = run(std::string(cli_bin()) + " analyze --data " + data +
                " --covariate nope --strata s 2>/dev/null >/dev/null");
  CHECK(rc2 == 2);
}

TEST_CASE("randomize: determinism, exact block counts, no input mutation") {
  std::string cov = tmp_path("cov.csv");
  std::string before = "id,site\n";
  for (int i = 0; i < 12; ++i) before += "u" + std::to_string(i) + ",a\n";
  spit(cov, before);
  std::string o1 = tmp_path("r1.csv"), o2 = tmp_path("r2.csv");
  int rc = run(std::string(cli_bin()) + " randomize --covariates " + cov +
               " --method sbr --pi 0.5 --block 6 --seed 77 --out " + o1);
  REQUIRE(rc == 0);
  run(std::string(cli_bin()) + " randomize --covariates " + cov +
      " --method sbr --pi 0.5 --block 6 --seed 77 --out " + o2);
  CHECK(slurp(o1) == slurp(o2));
  CHECK(slurp(cov) == before);  // input untouched

  // one stratum, two complete blocks: exactly 6 treated
  auto text = slurp(o1);
  int treated = 0;
  for (std::size_t pos = text.find('\n') + 1; pos < text.size();
       pos = text.find('\n', pos) + 1) {
    auto comma = text.rfind(',', text.find('\n', pos));
    treated += text[comma + 1] == '1';
    if (text.find('\n', pos) == std::string::npos) break;
  }
  CHECK(treated == 6);

  int rc2 = run(std::string(cli_bin()) + " randomize --covariates " + cov +
                " --method sbr --pi 0 --seed 1 2>/dev/null >/dev/null");
  CHECK(rc2 == 2);

  // refuses to double-assign a file that already carries an arm column
  int rc3 = run(std::string(cli_bin()) + " randomize --covariates " + o1 +
                " --method sr --pi 0.5 --seed 1 2>/dev/null >/dev/null");
  CHECK(rc3 == 2);
}

TEST_CASE("randomize minimization balances the margin columns") {
  std::string cov = tmp_path("covmin.csv");
  std::string text = "id,sex,site\n";
  Rng rng(3, 0);
  for (int i = 0; i < 60; ++i) {
    text += "u" + std::to_string(i) + "," + (rng.next_bernoulli(0.5) ? "f" : "m") + "," +
            (rng.next_bernoulli(0.5) ? "east" : "west") + "\n";
  }
  spit(cov, text);
  std::string out = tmp_path("rmin.csv");
  int rc = run(std::string(cli_bin()) + " randomize --covariates " + cov +
               " --strata sex,site --method min --pi 0.5 --seed 4 --out " + out);
  REQUIRE(rc == 0);
  // crude margin check: treated fraction among each sex within 35-65%
  std::istringstream is(slurp(out));
  std::string line;
  std::getline(is, line);
  int nf = 0, tf = 0, nm = 0, tm = 0;
  while (std::getline(is, line)) {
    bool female = line.find(",f,") != std::string::npos;
    bool treated = line[line.size() - 1] == '1';
    (female ? nf : nm)++;
    if (treated) (female ? tf : tm)++;
  }
  CHECK(std::fabs(tf / double(nf) - 0.5) < 0.15);
  CHECK(std::fabs(tm / double(nm) - 0.5) < 0.15);
}
