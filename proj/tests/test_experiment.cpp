// SPDX-License-Identifier: MIT
/**
 * @file test_experiment.cpp
 * @brief Configuration parsing, study orchestration, CSV output, and plot
 *        reshaping.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "nlpde/experiment.hpp"

using namespace nlpde;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("nlpde_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_config(const fs::path& dir, const std::string& body) {
  const fs::path path = dir / "config.txt";
  std::ofstream out(path);
  out << body;
  return path.string();
}

/// Extract the `value` column of the first row whose statistic matches.
std::string csv_value(const std::string& csv, const std::string& statistic) {
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() == 12 && fields[9] == statistic) return fields[10];
  }
  return "";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("defaults are sensible and overridable") {
  const ExperimentConfig cfg = parse_config("", {});
  CHECK(cfg.study == StudyKind::single_run);
  CHECK(cfg.testcase == TestcaseKind::barenblatt);
  CHECK(cfg.d == 1);
  CHECK(cfg.m == doctest::Approx(1.5));
  CHECK(cfg.T == doctest::Approx(1.0));
  CHECK(cfg.N_values == std::vector<int>{1000});
  CHECK(cfg.eps_values == std::vector<double>{0.3});
  CHECK(cfg.n_values == std::vector<int>{10});
  CHECK(cfg.M == 100);
  CHECK(cfg.Q == 1000);
  CHECK(cfg.driver == DriverKind::iid);
  CHECK(cfg.rule == WeightRule::left_endpoint);
  CHECK(!cfg.out_dir.empty());

  const ExperimentConfig flags = parse_config("", {{"m", "2.5"}, {"Q", "17"}});
  CHECK(flags.m == doctest::Approx(2.5));
  CHECK(flags.Q == 17);
}

TEST_CASE("config files parse with comments, and flags override files") {
  const fs::path dir = fresh_dir("cfg");
  const std::string path = write_config(dir,
                                        "# comment line\n"
                                        "study = coupling\n"
                                        "N = 100, 200   # inline comment\n"
                                        "epsilon = 0.25\n"
                                        "seed = 555\n"
                                        "\n");
  const ExperimentConfig cfg = parse_config(path, {});
  CHECK(cfg.study == StudyKind::coupling);
  CHECK(cfg.N_values == std::vector<int>{100, 200});
  CHECK(cfg.eps_values == std::vector<double>{0.25});
  CHECK(cfg.seed == 555);

  const ExperimentConfig overridden = parse_config(path, {{"seed", "777"}});
  CHECK(overridden.seed == 777);  // flag beats file
  CHECK(overridden.study == StudyKind::coupling);

  fs::remove_all(dir);
}

TEST_CASE("invalid settings are rejected with the offending key named") {
  CHECK_THROWS_WITH_AS(parse_config("", {{"m", "0.5"}}), doctest::Contains("'m'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("", {{"bogus_key", "1"}}),
                       doctest::Contains("bogus_key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("", {{"epsilon", "-0.1"}}),
                       doctest::Contains("epsilon"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("", {{"N", "abc"}}), doctest::Contains("'N'"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_config("/no/such/file.cfg", {}), std::invalid_argument);
  // The custom driver cannot be configured from text.
  CHECK_THROWS_WITH_AS(parse_config("", {{"driver", "custom"}}),
                       doctest::Contains("driver"), std::invalid_argument);
}

TEST_CASE("study shape rules are enforced") {
  // variance-vs-N needs at least two N values.
  CHECK_THROWS_WITH_AS(parse_config("", {{"study", "variance-vs-N"}}),
                       doctest::Contains("'N'"), std::invalid_argument);
  // ...and a single epsilon.
  CHECK_THROWS_WITH_AS(
      parse_config("", {{"study", "variance-vs-N"}, {"N", "100,200"}, {"eps", "0.2,0.3"}}),
      doctest::Contains("epsilon"), std::invalid_argument);
  // bias-vs-eps needs at least two bandwidths.
  CHECK_THROWS_AS(parse_config("", {{"study", "bias-vs-eps"}}), std::invalid_argument);
  // timestep needs n_ref and nesting grids.
  CHECK_THROWS_WITH_AS(parse_config("", {{"study", "timestep"}, {"n", "5,10"}}),
                       doctest::Contains("n_ref"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_config("", {{"study", "timestep"}, {"n", "5,12"}, {"n_ref", "40"}}),
      doctest::Contains("n_ref"), std::invalid_argument);
  CHECK_NOTHROW(parse_config("", {{"study", "timestep"}, {"n", "5,10"}, {"n_ref", "40"}}));
  // variance/bias studies need replications.
  CHECK_THROWS_WITH_AS(
      parse_config("", {{"study", "variance-vs-N"}, {"N", "100,200"}, {"M", "1"}}),
      doctest::Contains("'M'"), std::invalid_argument);
  // antithetic needs even ensembles.
  CHECK_THROWS_WITH_AS(parse_config("", {{"driver", "antithetic"}, {"N", "101"}}),
                       doctest::Contains("'N'"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("", {{"study", "nonsense"}}), std::invalid_argument);
}

TEST_CASE("a tiny conservative run writes a parseable CSV with exact weights") {
  const fs::path dir = fresh_dir("run_cons");
  ExperimentConfig cfg = parse_config(
      "", {{"study", "single-run"}, {"testcase", "conservative"}, {"N", "200"},
           {"eps", "0.3"}, {"n", "4"}, {"seed", "12"}, {"out", dir.string()}});
  CHECK(run_study(cfg) == 0);

  const fs::path csv = dir / "single-run.csv";
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(dir / "single-run_summary.txt"));
  const std::string body = slurp(csv);
  // Weight dynamics are trivial in the conservative case: the total weight
  // is exactly the particle count and both extremes are exactly 1.
  CHECK(csv_value(body, "total_weight") == "200");
  CHECK(csv_value(body, "weight_min") == "1");
  CHECK(csv_value(body, "weight_max") == "1");
  const double mass = std::stod(csv_value(body, "kde_mass"));
  CHECK(mass == doctest::Approx(1.0).epsilon(0.02));
  fs::remove_all(dir);
}

TEST_CASE("reruns and thread counts do not change a byte of the CSV") {
  const fs::path dir1 = fresh_dir("det1");
  const fs::path dir2 = fresh_dir("det2");
  const fs::path dir3 = fresh_dir("det3");
  const std::vector<std::pair<std::string, std::string>> base = {
      {"study", "variance-vs-N"}, {"N", "50,100"}, {"eps", "0.4"}, {"n", "3"},
      {"M", "3"},                 {"Q", "50"},     {"seed", "31"}};

  auto with = [&base](const std::string& out, const std::string& threads) {
    auto settings = base;
    settings.emplace_back("out", out);
    settings.emplace_back("threads", threads);
    return parse_config("", settings);
  };
  CHECK(run_study(with(dir1.string(), "1")) == 0);
  CHECK(run_study(with(dir2.string(), "1")) == 0);
  CHECK(run_study(with(dir3.string(), "2")) == 0);

  const std::string a = slurp(dir1 / "variance-vs-N.csv");
  const std::string b = slurp(dir2 / "variance-vs-N.csv");
  const std::string c = slurp(dir3 / "variance-vs-N.csv");
  CHECK(a == b);
  CHECK(a == c);
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  fs::remove_all(dir3);
}

TEST_CASE("plot reshaping emits log-log curves and validates its input") {
  const fs::path dir = fresh_dir("plot");
  ExperimentConfig cfg = parse_config(
      "", {{"study", "variance-vs-N"}, {"N", "50,100"}, {"eps", "0.4"}, {"n", "3"},
           {"M", "3"},                 {"Q", "50"},     {"seed", "31"},
           {"out", dir.string()}});
  CHECK(run_study(cfg) == 0);
  const std::string csv = (dir / "variance-vs-N.csv").string();

  emit_plotdata(csv, StudyKind::variance_vs_N, dir.string());
  const fs::path curve = dir / "variance_vs_N_eps0.40000000000000002.dat";
  REQUIRE(fs::exists(curve));
  const std::string body = slurp(curve);
  CHECK(body.find("log10") != std::string::npos);
  // Two N values => two data lines beyond the header.
  int data_lines = 0;
  std::stringstream ss(body);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line[0] != '#') ++data_lines;
  }
  CHECK(data_lines == 2);

  // A CSV without the requested statistic is an error that names it.
  CHECK_THROWS_WITH_AS(emit_plotdata(csv, StudyKind::coupling, dir.string()),
                       doctest::Contains("coupling_msd"), std::runtime_error);

  // An empty CSV is rejected.
  const fs::path empty = dir / "empty.csv";
  std::ofstream(empty) << "# nothing\nstudy,d,m,N,epsilon,n,M,Q,seed,statistic,value,stderr\n";
  CHECK_THROWS_AS(emit_plotdata(empty.string(), StudyKind::variance_vs_N, dir.string()),
                  std::runtime_error);
  CHECK_THROWS_AS(emit_plotdata((dir / "missing.csv").string(), StudyKind::variance_vs_N,
                                dir.string()),
                  std::runtime_error);
  // single-run has no rate curves.
  CHECK_THROWS_AS(emit_plotdata(csv, StudyKind::single_run, dir.string()),
                  std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("study names round-trip") {
  for (StudyKind kind :
       {StudyKind::variance_vs_N, StudyKind::variance_vs_eps, StudyKind::bias_vs_eps,
        StudyKind::timestep, StudyKind::coupling, StudyKind::single_run}) {
    CHECK(study_from_string(study_name(kind)) == kind);
  }
  CHECK_THROWS_AS(study_from_string("not-a-study"), std::invalid_argument);
}

TEST_CASE("the custom testcase cannot be run from configuration alone") {
  ExperimentConfig cfg = parse_config("", {{"testcase", "custom"}});
  CHECK_THROWS_AS(run_study(cfg), std::invalid_argument);
}

}  // TEST_SUITE
