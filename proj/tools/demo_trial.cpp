// Generates a synthetic depression-trial CSV (placeholder data, not the real
// trial): GENDER and a categorized severity score form the randomization
// strata, a categorized age is an additional covariate, and the outcome
// carries a severity-by-treatment interaction. Use it to drive the
// `carstat analyze` workflow end to end.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "carstat/randomization.hpp"
#include "carstat/rng.hpp"

using namespace carstat;

int main(int argc, char** argv) {
  CLI::App app{"synthetic trial data generator (placeholder)"};
  int n = 600;
  std::uint64_t seed = 1;
  std::string out = "-";
  app.add_option("--n", n, "number of units");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out, "output path ('-' for stdout)");
  CLI11_PARSE(app, argc, argv);

  Rng rng(seed, 0);
  struct Unit {
    int gender;
    int severity;  // 0: <18, 1: 18-21, 2: >21
    int age;       // 0: <40, 1: 40-49, 2: >=49
    double latent;
  };
  std::vector<Unit> units(n);
  std::vector<int> strata(n);
  for (auto& u : units) {
    u.gender = rng.next_bernoulli(0.5) ? 1 : 0;
    double sev_score = 19.5 + 2.5 * rng.next_normal();
    u.severity = sev_score < 18.0 ? 0 : (sev_score <= 21.0 ? 1 : 2);
    double age_years = 44.0 + 9.0 * rng.next_normal();
    u.age = age_years < 40.0 ? 0 : (age_years < 49.0 ? 1 : 2);
    u.latent = sev_score;
  }
  for (int i = 0; i < n; ++i) strata[i] = units[i].gender * 3 + units[i].severity;

  DesignSpec spec{Method::SBR, 0.5, 6, 0.75};
  RandomizerState state(spec, 6, {}, Rng(seed, 1));
  std::vector<int> arms(n);
  for (int i = 0; i < n; ++i) arms[i] = assign_next(state, spec, strata[i]);

  std::ostringstream os;
  os << "y,a,GENDER,HAMD17d,AGEd\n";
  const char* sev_labels[3] = {"lt18", "18to21", "gt21"};
  const char* age_labels[3] = {"lt40", "40to49", "ge49"};
  for (int i = 0; i < n; ++i) {
    const Unit& u = units[i];
    // Final score: severity-driven baseline, a treatment benefit that fades
    // at high severity, and a mild age-by-treatment interaction.
    double y = 0.9 * u.latent - 1.0 * u.gender + 0.8 * u.age +
               arms[i] * (-4.0 + 1.6 * u.severity + 0.5 * (u.age == 2)) +
               3.0 * rng.next_normal();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", y);
    os << buf << ',' << arms[i] << ',' << u.gender << ',' << sev_labels[u.severity] << ','
       << age_labels[u.age] << '\n';
  }
  if (out.empty() || out == "-") {
    std::cout << os.str();
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write '" << out << "'\n";
      return 3;
    }
    f << os.str();
  }
  return 0;
}
