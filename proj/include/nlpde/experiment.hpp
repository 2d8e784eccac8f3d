// SPDX-License-Identifier: MIT
/**
 * @file experiment.hpp
 * @brief Experiment orchestration: flat key=value configs with flag
 *        overrides, study execution over (N, epsilon, n) grids with M
 *        replications, CSV + summary emission, and plot-data reshaping.
 *
 * CSV schema (stable, column order fixed):
 *   study,d,m,N,epsilon,n,M,Q,seed,statistic,value,stderr
 * preceded by '#' comment lines echoing the tool version and the resolved
 * semantic configuration.  Floats are serialized with 17 significant digits
 * (round-trip exact).  Execution knobs that cannot affect the numbers
 * (thread count, output directory) are deliberately excluded from the
 * header so reruns at different parallelism are byte-identical.
 */
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nlpde/barenblatt.hpp"
#include "nlpde/simulator.hpp"

namespace nlpde {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class StudyKind { variance_vs_N, variance_vs_eps, bias_vs_eps, timestep, coupling, single_run };
enum class TestcaseKind { barenblatt, conservative, custom };

std::string study_name(StudyKind kind);
StudyKind study_from_string(const std::string& name);  ///< @throws std::invalid_argument

struct ExperimentConfig {
  StudyKind study = StudyKind::single_run;
  TestcaseKind testcase = TestcaseKind::barenblatt;
  int d = 1;
  double m = 1.5;
  std::vector<double> mu;  ///< empty = zeros
  std::vector<double> A;   ///< empty = testcase default ((2/3) I for barenblatt, 0 for conservative)
  double T = 1.0;
  std::vector<int> N_values{1000};
  std::vector<double> eps_values{0.3};
  std::vector<int> n_values{10};
  int n_ref = 0;  ///< timestep study only
  int M = 100;
  int Q = 1000;
  std::uint64_t seed = 12345;
  DriverKind driver = DriverKind::iid;
  WeightRule rule = WeightRule::left_endpoint;
  RadialPower radial = RadialPower::squared;
  GaussianDrift drift = GaussianDrift::restoring;
  int threads = 1;
  std::string out_dir;  ///< resolved from flag > file > $NLPDE_OUT > "out"
};

/**
 * Parse and validate a configuration.
 *
 * Precedence: built-in defaults < file values < overrides (flags).  The file
 * is a flat `key = value` list ('#' comments allowed); lists are
 * comma-separated.  `A` accepts a single scalar a (meaning a * I_d) or a
 * full row-major d*d matrix.  Study-shape rules are enforced here: the swept
 * list must be non-singleton and the others singletons.
 *
 * @param file_path empty string = no file.
 * @throws std::invalid_argument naming the offending key on unknown keys,
 *         malformed numbers, or study-shape violations.
 */
ExperimentConfig parse_config(const std::string& file_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

/**
 * Execute the configured study; writes `<study>.csv` and `<study>_summary.txt`
 * into the output directory.  Deterministic given the seed (bit-identical
 * files for any thread count).  A simulation blow-up preserves the partial
 * CSV, appends a `failed` marker row, and makes the exit status nonzero.
 *
 * @return 0 on success, 1 on a failed (blown-up) study.
 */
int run_study(const ExperimentConfig& cfg);

/**
 * Reshape a run_study CSV into per-curve two-column plot files
 * (log10 x, log10 y) in `out_dir`, named `<study>_<statistic>[_eps<value>].dat`.
 * @throws std::runtime_error when expected statistic rows are missing.
 */
void emit_plotdata(const std::string& csv_path, StudyKind study, const std::string& out_dir);

}  // namespace nlpde
