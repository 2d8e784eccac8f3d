// SPDX-License-Identifier: MIT
#include "nlpde/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nlpde/analysis.hpp"

namespace nlpde {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) parts.push_back(item);
  return parts;
}

[[noreturn]] void usage_error(const std::string& key, const std::string& what) {
  throw std::invalid_argument("configuration key '" + key + "': " + what);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    usage_error(key, "malformed number '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    usage_error(key, "malformed integer '" + value + "'");
  }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& part : split(value, ',')) {
    out.push_back(parse_double(key, trim(part)));
  }
  if (out.empty()) usage_error(key, "empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const std::string& part : split(value, ',')) {
    const long long v = parse_int(key, trim(part));
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) usage_error(key, "empty list");
  return out;
}

}  // namespace

std::string study_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::variance_vs_N: return "variance-vs-N";
    case StudyKind::variance_vs_eps: return "variance-vs-eps";
    case StudyKind::bias_vs_eps: return "bias-vs-eps";
    case StudyKind::timestep: return "timestep";
    case StudyKind::coupling: return "coupling";
    case StudyKind::single_run: return "single-run";
  }
  throw std::logic_error("study_name: unknown study kind");
}

StudyKind study_from_string(const std::string& name) {
  if (name == "variance-vs-N") return StudyKind::variance_vs_N;
  if (name == "variance-vs-eps") return StudyKind::variance_vs_eps;
  if (name == "bias-vs-eps") return StudyKind::bias_vs_eps;
  if (name == "timestep") return StudyKind::timestep;
  if (name == "coupling") return StudyKind::coupling;
  if (name == "single-run") return StudyKind::single_run;
  throw std::invalid_argument("configuration key 'study': unknown study kind '" + name + "'");
}

namespace {

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "study") {
    cfg.study = study_from_string(value);
  } else if (key == "testcase") {
    if (value == "barenblatt") cfg.testcase = TestcaseKind::barenblatt;
    else if (value == "conservative") cfg.testcase = TestcaseKind::conservative;
    else if (value == "custom") cfg.testcase = TestcaseKind::custom;
    else usage_error(key, "unknown testcase '" + value + "'");
  } else if (key == "d") {
    const long long d = parse_int(key, value);
    if (d < 1) usage_error(key, "dimension must be >= 1");
    cfg.d = static_cast<int>(d);
  } else if (key == "m") {
    cfg.m = parse_double(key, value);
    if (!(cfg.m > 1.0)) usage_error(key, "requires m > 1");
  } else if (key == "mu") {
    cfg.mu = parse_double_list(key, value);
  } else if (key == "A") {
    cfg.A = parse_double_list(key, value);
  } else if (key == "T") {
    cfg.T = parse_double(key, value);
    if (!(cfg.T > 0.0)) usage_error(key, "requires T > 0");
  } else if (key == "N") {
    cfg.N_values = parse_int_list(key, value);
    for (int N : cfg.N_values) {
      if (N < 1) usage_error(key, "particle counts must be >= 1");
    }
  } else if (key == "epsilon" || key == "eps") {
    cfg.eps_values = parse_double_list("epsilon", value);
    for (double e : cfg.eps_values) {
      if (!(e > 0.0)) usage_error("epsilon", "bandwidths must be > 0");
    }
  } else if (key == "n") {
    cfg.n_values = parse_int_list(key, value);
    for (int n : cfg.n_values) {
      if (n < 1) usage_error(key, "step counts must be >= 1");
    }
  } else if (key == "n_ref") {
    const long long v = parse_int(key, value);
    if (v < 1) usage_error(key, "reference step count must be >= 1");
    cfg.n_ref = static_cast<int>(v);
  } else if (key == "M") {
    const long long v = parse_int(key, value);
    if (v < 1) usage_error(key, "replication count must be >= 1");
    cfg.M = static_cast<int>(v);
  } else if (key == "Q") {
    const long long v = parse_int(key, value);
    if (v < 1) usage_error(key, "evaluation point count must be >= 1");
    cfg.Q = static_cast<int>(v);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "driver") {
    if (value == "iid") cfg.driver = DriverKind::iid;
    else if (value == "antithetic") cfg.driver = DriverKind::antithetic;
    else if (value == "custom") {
      usage_error(key, "the custom driver needs an increment callable and is only available "
                       "through the library API");
    } else usage_error(key, "unknown driver '" + value + "'");
  } else if (key == "weight_rule") {
    if (value == "left") cfg.rule = WeightRule::left_endpoint;
    else if (value == "trapezoid") cfg.rule = WeightRule::trapezoid;
    else usage_error(key, "expected 'left' or 'trapezoid'");
  } else if (key == "radial") {
    if (value == "squared") cfg.radial = RadialPower::squared;
    else if (value == "linear") cfg.radial = RadialPower::linear;
    else usage_error(key, "expected 'squared' or 'linear'");
  } else if (key == "drift") {
    if (value == "restoring") cfg.drift = GaussianDrift::restoring;
    else if (value == "repelling") cfg.drift = GaussianDrift::repelling;
    else usage_error(key, "expected 'restoring' or 'repelling'");
  } else if (key == "threads") {
    const long long v = parse_int(key, value);
    if (v < 1) usage_error(key, "thread count must be >= 1");
    cfg.threads = static_cast<int>(v);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else {
    throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
}

void validate_shape(const ExperimentConfig& cfg) {
  const auto require_singleton = [&](const char* key, std::size_t size) {
    if (size != 1) {
      usage_error(key, "must be a single value for study=" + study_name(cfg.study));
    }
  };
  const auto require_swept = [&](const char* key, std::size_t size) {
    if (size < 2) {
      usage_error(key, "must list at least 2 values for study=" + study_name(cfg.study));
    }
  };
  const bool needs_replications =
      cfg.study == StudyKind::variance_vs_N || cfg.study == StudyKind::variance_vs_eps ||
      cfg.study == StudyKind::bias_vs_eps || cfg.study == StudyKind::timestep;
  if (needs_replications && cfg.M < 2) {
    usage_error("M", "variance/bias studies require M >= 2");
  }

  switch (cfg.study) {
    case StudyKind::variance_vs_N:
      require_swept("N", cfg.N_values.size());
      require_singleton("epsilon", cfg.eps_values.size());
      require_singleton("n", cfg.n_values.size());
      break;
    case StudyKind::variance_vs_eps:
    case StudyKind::bias_vs_eps:
      require_swept("epsilon", cfg.eps_values.size());
      require_singleton("N", cfg.N_values.size());
      require_singleton("n", cfg.n_values.size());
      break;
    case StudyKind::timestep:
      require_swept("n", cfg.n_values.size());
      require_singleton("N", cfg.N_values.size());
      require_singleton("epsilon", cfg.eps_values.size());
      if (cfg.n_ref < 1) usage_error("n_ref", "required for study=timestep");
      for (int n : cfg.n_values) {
        if (n > cfg.n_ref || cfg.n_ref % n != 0) {
          usage_error("n_ref", "must be a multiple of every entry of n (grids must nest)");
        }
      }
      break;
    case StudyKind::coupling:
      require_swept("N", cfg.N_values.size());
      require_singleton("epsilon", cfg.eps_values.size());
      require_singleton("n", cfg.n_values.size());
      break;
    case StudyKind::single_run:
      require_singleton("N", cfg.N_values.size());
      require_singleton("epsilon", cfg.eps_values.size());
      require_singleton("n", cfg.n_values.size());
      break;
  }
  if (cfg.driver == DriverKind::antithetic) {
    for (int N : cfg.N_values) {
      if (N % 2 != 0) usage_error("N", "antithetic driver requires even particle counts");
    }
  }
  if (!cfg.mu.empty() && static_cast<int>(cfg.mu.size()) != cfg.d) {
    usage_error("mu", "must list exactly d components");
  }
  if (!cfg.A.empty() && cfg.A.size() != 1 &&
      static_cast<int>(cfg.A.size()) != cfg.d * cfg.d) {
    usage_error("A", "must be a single scalar a (meaning a*I) or a full d*d matrix");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& file_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig cfg;

  if (!file_path.empty()) {
    std::ifstream in(file_path);
    if (!in) throw std::invalid_argument("configuration file not found: " + file_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("configuration file line " + std::to_string(line_no) +
                                    ": expected key = value");
      }
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const auto& [key, value] : overrides) apply_setting(cfg, key, value);

  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("NLPDE_OUT");
    cfg.out_dir = env && *env ? env : "out";
  }
  validate_shape(cfg);
  return cfg;
}

// ===========================================================================
// Study execution
// ===========================================================================

namespace {

struct CsvRow {
  int N = 0;
  double epsilon = 0.0;
  int n = 0;
  std::string statistic;
  double value = 0.0;
  double stderr_value = 0.0;
};

std::string config_echo(const ExperimentConfig& cfg) {
  std::string a_echo = cfg.A.empty() ? std::string("default") : join_doubles(cfg.A);
  std::string mu_echo = cfg.mu.empty() ? std::string("0") : join_doubles(cfg.mu);
  std::string testcase = cfg.testcase == TestcaseKind::barenblatt
                             ? "barenblatt"
                             : (cfg.testcase == TestcaseKind::conservative ? "conservative"
                                                                           : "custom");
  std::string out = "study=" + study_name(cfg.study) + " testcase=" + testcase +
                    " d=" + std::to_string(cfg.d) + " m=" + fmt(cfg.m) + " T=" + fmt(cfg.T) +
                    " N=" + join_ints(cfg.N_values) + " epsilon=" + join_doubles(cfg.eps_values) +
                    " n=" + join_ints(cfg.n_values) + " n_ref=" + std::to_string(cfg.n_ref) +
                    " M=" + std::to_string(cfg.M) + " Q=" + std::to_string(cfg.Q) +
                    " seed=" + std::to_string(cfg.seed) +
                    " driver=" + (cfg.driver == DriverKind::iid ? "iid" : "antithetic") +
                    " weight_rule=" +
                    (cfg.rule == WeightRule::left_endpoint ? "left" : "trapezoid") +
                    " radial=" + (cfg.radial == RadialPower::squared ? "squared" : "linear") +
                    " drift=" +
                    (cfg.drift == GaussianDrift::restoring ? "restoring" : "repelling") +
                    " mu=" + mu_echo + " A=" + a_echo;
  return out;
}

void write_csv(const ExperimentConfig& cfg, const std::vector<CsvRow>& rows,
               const std::vector<std::string>& trailing_comments, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: identical newlines everywhere
  if (!out) throw std::runtime_error("cannot open CSV output file: " + path);
  out << "# nlpde " << kArtifactVersion << "\n";
  out << "# " << config_echo(cfg) << "\n";
  out << "study,d,m,N,epsilon,n,M,Q,seed,statistic,value,stderr\n";
  for (const CsvRow& row : rows) {
    out << study_name(cfg.study) << ',' << cfg.d << ',' << fmt(cfg.m) << ',' << row.N << ','
        << fmt(row.epsilon) << ',' << row.n << ',' << cfg.M << ',' << cfg.Q << ',' << cfg.seed
        << ',' << row.statistic << ',' << fmt(row.value) << ',' << fmt(row.stderr_value) << "\n";
  }
  for (const std::string& comment : trailing_comments) out << "# " << comment << "\n";
}

/// Collect (x, value) pairs of one statistic and fit a rate when >= 3 points.
std::string fit_line(const std::string& label, const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  if (xs.size() < 3) {
    return label + ": slope n/a (needs at least 3 points)";
  }
  for (double y : ys) {
    if (!(y > 0.0)) return label + ": slope n/a (nonpositive values, cannot take logs)";
  }
  const RateFit fit = fit_rate(xs, ys);
  return label + ": slope=" + fmt(fit.slope) + " intercept_ln=" + fmt(fit.intercept) +
         " R2=" + fmt(fit.r_squared);
}

BarenblattParams build_testcase(const ExperimentConfig& cfg) {
  if (cfg.testcase == TestcaseKind::custom) {
    throw std::invalid_argument(
        "testcase 'custom' has no built-in coefficients; assemble a Model through the library "
        "API instead");
  }
  std::vector<double> A;
  if (cfg.testcase == TestcaseKind::conservative) {
    A.assign(static_cast<std::size_t>(cfg.d) * cfg.d, 0.0);
  } else if (cfg.A.size() == 1) {
    A.assign(static_cast<std::size_t>(cfg.d) * cfg.d, 0.0);
    for (int i = 0; i < cfg.d; ++i) A[static_cast<std::size_t>(i) * cfg.d + i] = cfg.A[0];
  } else if (!cfg.A.empty()) {
    A = cfg.A;
  } else {
    // Benchmark default: A = (2/3) I_d.
    A.assign(static_cast<std::size_t>(cfg.d) * cfg.d, 0.0);
    for (int i = 0; i < cfg.d; ++i) A[static_cast<std::size_t>(i) * cfg.d + i] = 2.0 / 3.0;
  }
  return make_barenblatt(cfg.d, cfg.m, cfg.mu, A, cfg.radial, cfg.drift);
}

void append_report_rows(std::vector<CsvRow>& rows, int N, double eps, int n,
                        const ErrorReport& report) {
  rows.push_back({N, eps, n, "mise", report.mise, report.mise_se});
  rows.push_back({N, eps, n, "variance", report.variance, report.variance_se});
  rows.push_back({N, eps, n, "bias_sq", report.bias_sq, report.bias_sq_se});
  rows.push_back({N, eps, n, "bias_sq_raw", report.bias_sq_raw, report.bias_sq_se});
}

}  // namespace

int run_study(const ExperimentConfig& cfg) {
  const BarenblattParams params = build_testcase(cfg);
  const InitialLaw law = barenblatt_initial(params);
  auto exact = [&params](double t, const double* x) { return exact_solution(params, t, x); };

  std::filesystem::create_directories(cfg.out_dir);
  const std::string csv_path = cfg.out_dir + "/" + study_name(cfg.study) + ".csv";
  const std::string summary_path = cfg.out_dir + "/" + study_name(cfg.study) + "_summary.txt";

  std::vector<CsvRow> rows;
  std::vector<std::string> trailing;
  std::vector<std::string> summary;
  summary.push_back("study " + study_name(cfg.study));
  summary.push_back(config_echo(cfg));
  bool failed = false;

  const double warn_threshold = 5e11;
  {
    double worst = 0.0;
    for (int N : cfg.N_values) {
      for (int n : cfg.n_values) {
        worst = std::max(worst, complexity_estimate(N, std::max(n, cfg.n_ref), cfg.Q));
      }
    }
    worst *= cfg.M;
    if (worst > warn_threshold) {
      std::fprintf(stderr,
                   "warning: estimated %.3g kernel evaluations; this job may take a long time\n",
                   worst);
    }
  }

  try {
    switch (cfg.study) {
      case StudyKind::variance_vs_N: {
        const double eps = cfg.eps_values[0];
        const int n = cfg.n_values[0];
        const MollifierKernel kernel = gaussian_kernel(cfg.d, eps);
        const Model model = barenblatt_model(params, kernel, cfg.T);
        const EvalPoints points = draw_eval_points(law, cfg.Q, cfg.seed);
        std::vector<double> xs, variances;
        for (int N : cfg.N_values) {
          const ReplicationBatch batch = run_replications(model, kernel, TimeGrid{cfg.T, n}, N,
                                                          cfg.M, cfg.driver, cfg.seed, points,
                                                          cfg.threads, cfg.rule);
          const ErrorReport report = variance_bias_split(batch, exact, cfg.T);
          append_report_rows(rows, N, eps, n, report);
          xs.push_back(N);
          variances.push_back(report.variance);
          summary.push_back("N=" + std::to_string(N) + ": mise=" + fmt(report.mise) +
                            " variance=" + fmt(report.variance) + " bias_sq=" +
                            fmt(report.bias_sq));
        }
        summary.push_back(fit_line("variance vs N", xs, variances));
        break;
      }
      case StudyKind::variance_vs_eps:
      case StudyKind::bias_vs_eps: {
        const int N = cfg.N_values[0];
        const int n = cfg.n_values[0];
        const EvalPoints points = draw_eval_points(law, cfg.Q, cfg.seed);
        std::vector<double> xs, variances, biases;
        bool bias_positive = true;
        for (double eps : cfg.eps_values) {
          const MollifierKernel kernel = gaussian_kernel(cfg.d, eps);
          const Model model = barenblatt_model(params, kernel, cfg.T);
          const ReplicationBatch batch = run_replications(model, kernel, TimeGrid{cfg.T, n}, N,
                                                          cfg.M, cfg.driver, cfg.seed, points,
                                                          cfg.threads, cfg.rule);
          const ErrorReport report = variance_bias_split(batch, exact, cfg.T);
          append_report_rows(rows, N, eps, n, report);
          xs.push_back(eps);
          variances.push_back(report.variance);
          biases.push_back(report.bias_sq);
          bias_positive = bias_positive && report.bias_sq > 0.0;
          summary.push_back("epsilon=" + fmt(eps) + ": mise=" + fmt(report.mise) +
                            " variance=" + fmt(report.variance) + " bias_sq=" +
                            fmt(report.bias_sq));
        }
        if (cfg.study == StudyKind::variance_vs_eps) {
          summary.push_back(fit_line("variance vs epsilon", xs, variances));
        } else {
          summary.push_back(fit_line("bias_sq vs epsilon", xs, biases));
        }
        break;
      }
      case StudyKind::timestep: {
        const double eps = cfg.eps_values[0];
        const int N = cfg.N_values[0];
        const MollifierKernel kernel = gaussian_kernel(cfg.d, eps);
        const Model model = barenblatt_model(params, kernel, cfg.T);
        const EvalPoints points = draw_eval_points(law, cfg.Q, cfg.seed);
        const std::vector<TimestepPoint> study =
            timestep_study(model, kernel, cfg.T, N, cfg.M, cfg.driver, cfg.seed, points,
                           cfg.n_values, cfg.n_ref, cfg.threads, cfg.rule);
        std::vector<double> xs, variances, biases;
        for (const TimestepPoint& point : study) {
          rows.push_back({N, eps, point.n, "variance", point.variance, point.variance_se});
          rows.push_back({N, eps, point.n, "bias_sq", point.bias_sq, point.bias_sq_se});
          rows.push_back({N, eps, point.n, "bias_sq_raw", point.bias_sq_raw, point.bias_sq_se});
          xs.push_back(point.n);
          variances.push_back(point.variance);
          biases.push_back(point.bias_sq);
          summary.push_back("n=" + std::to_string(point.n) + ": variance=" + fmt(point.variance) +
                            " bias_sq=" + fmt(point.bias_sq) + " (vs n_ref=" +
                            std::to_string(cfg.n_ref) + ")");
        }
        summary.push_back(fit_line("bias_sq vs n", xs, biases));
        summary.push_back(fit_line("variance vs n", xs, variances));
        break;
      }
      case StudyKind::coupling: {
        const double eps = cfg.eps_values[0];
        const int n = cfg.n_values[0];
        const MollifierKernel kernel = gaussian_kernel(cfg.d, eps);
        const Model model = barenblatt_model(params, kernel, cfg.T);
        const std::vector<CouplingPoint> study =
            coupling_diagnostic(model, kernel, cfg.T, n, cfg.driver, cfg.seed, cfg.N_values, 0,
                                cfg.threads, cfg.rule);
        std::vector<double> xs, values;
        for (const CouplingPoint& point : study) {
          rows.push_back({point.N, eps, n, "coupling_msd", point.mean_sq_sup_dist, point.se});
          xs.push_back(point.N);
          values.push_back(point.mean_sq_sup_dist);
          summary.push_back("N=" + std::to_string(point.N) +
                            ": coupling_msd=" + fmt(point.mean_sq_sup_dist));
        }
        summary.push_back(fit_line("coupling_msd vs N", xs, values));
        break;
      }
      case StudyKind::single_run: {
        const double eps = cfg.eps_values[0];
        const int N = cfg.N_values[0];
        const int n = cfg.n_values[0];
        const MollifierKernel kernel = gaussian_kernel(cfg.d, eps);
        const Model model = barenblatt_model(params, kernel, cfg.T);
        BrownianDriver driver;
        driver.kind = cfg.driver;
        const Trajectory traj = run(model, kernel, TimeGrid{cfg.T, n}, driver, N,
                                    Seed{cfg.seed, 0}, RecordMode::final_only, cfg.rule,
                                    cfg.threads);
        const DensityEstimate& final_est = traj.final_estimate();
        double total_weight = 0.0, w_min = final_est.weights[0], w_max = w_min;
        for (double w : final_est.weights) {
          total_weight += w;
          w_min = std::min(w_min, w);
          w_max = std::max(w_max, w);
        }
        const double mass = kde_mass(final_est);
        rows.push_back({N, eps, n, "total_weight", total_weight, 0.0});
        rows.push_back({N, eps, n, "kde_mass", mass, 0.0});
        rows.push_back({N, eps, n, "weight_min", w_min, 0.0});
        rows.push_back({N, eps, n, "weight_max", w_max, 0.0});
        summary.push_back("total_weight=" + fmt(total_weight));
        summary.push_back("kde_mass=" + fmt(mass));
        summary.push_back("weight_min=" + fmt(w_min) + " weight_max=" + fmt(w_max));
        break;
      }
    }
  } catch (const std::runtime_error& error) {
    failed = true;
    rows.push_back({0, 0.0, 0, "failed", std::nan(""), std::nan("")});
    trailing.push_back(std::string("failure: ") + error.what());
    summary.push_back(std::string("FAILED: ") + error.what());
  }

  write_csv(cfg, rows, trailing, csv_path);
  std::ofstream sum(summary_path, std::ios::binary);
  if (!sum) throw std::runtime_error("cannot open summary output file: " + summary_path);
  for (const std::string& line : summary) sum << line << "\n";

  for (const std::string& line : summary) std::printf("%s\n", line.c_str());
  std::printf("wrote %s\n", csv_path.c_str());
  return failed ? 1 : 0;
}

// ===========================================================================
// Plot emission
// ===========================================================================

namespace {

struct ParsedRow {
  int N = 0;
  double epsilon = 0.0;
  int n = 0;
  std::string statistic;
  double value = 0.0;
};

std::vector<ParsedRow> read_csv_rows(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("plot: cannot open CSV file " + csv_path);
  std::vector<ParsedRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // column header line
      header_seen = true;
      continue;
    }
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 12) throw std::runtime_error("plot: malformed CSV row: " + line);
    ParsedRow row;
    row.N = static_cast<int>(std::stoll(f[3]));
    row.epsilon = std::stod(f[4]);
    row.n = static_cast<int>(std::stoll(f[5]));
    row.statistic = f[9];
    row.value = std::stod(f[10]);
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("plot: CSV contains no data rows: " + csv_path);
  return rows;
}

void write_curve(const std::string& path, const std::string& xlabel, const std::string& ylabel,
                 const std::vector<std::pair<double, double>>& points) {
  if (points.empty()) {
    throw std::runtime_error("plot: no usable rows for " + path);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("plot: cannot open output file " + path);
  out << "# log10(" << xlabel << ") log10(" << ylabel << ")\n";
  int skipped = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) {
      ++skipped;
      continue;
    }
    out << fmt(std::log10(x)) << ' ' << fmt(std::log10(y)) << "\n";
  }
  if (skipped > 0) out << "# skipped " << skipped << " nonpositive rows\n";
}

}  // namespace

void emit_plotdata(const std::string& csv_path, StudyKind study, const std::string& out_dir) {
  const std::vector<ParsedRow> rows = read_csv_rows(csv_path);
  std::filesystem::create_directories(out_dir);

  auto collect = [&rows](const std::string& statistic) {
    std::vector<ParsedRow> out;
    for (const ParsedRow& row : rows) {
      if (row.statistic == statistic) out.push_back(row);
    }
    if (out.empty()) {
      throw std::runtime_error("plot: no rows for statistic '" + statistic + "'");
    }
    return out;
  };

  switch (study) {
    case StudyKind::variance_vs_N: {
      // One curve per epsilon value.
      std::map<double, std::vector<std::pair<double, double>>> curves;
      for (const ParsedRow& row : collect("variance")) {
        curves[row.epsilon].push_back({static_cast<double>(row.N), row.value});
      }
      for (const auto& [eps, points] : curves) {
        write_curve(out_dir + "/variance_vs_N_eps" + fmt(eps) + ".dat", "N", "variance", points);
      }
      break;
    }
    case StudyKind::variance_vs_eps: {
      std::vector<std::pair<double, double>> points;
      for (const ParsedRow& row : collect("variance")) points.push_back({row.epsilon, row.value});
      write_curve(out_dir + "/variance_vs_eps.dat", "epsilon", "variance", points);
      break;
    }
    case StudyKind::bias_vs_eps: {
      std::vector<std::pair<double, double>> points;
      for (const ParsedRow& row : collect("bias_sq")) points.push_back({row.epsilon, row.value});
      write_curve(out_dir + "/bias_sq_vs_eps.dat", "epsilon", "bias_sq", points);
      break;
    }
    case StudyKind::timestep: {
      std::vector<std::pair<double, double>> bias, variance;
      for (const ParsedRow& row : collect("bias_sq")) {
        bias.push_back({static_cast<double>(row.n), row.value});
      }
      for (const ParsedRow& row : collect("variance")) {
        variance.push_back({static_cast<double>(row.n), row.value});
      }
      write_curve(out_dir + "/bias_sq_vs_n.dat", "n", "bias_sq", bias);
      write_curve(out_dir + "/variance_vs_n.dat", "n", "variance", variance);
      break;
    }
    case StudyKind::coupling: {
      std::vector<std::pair<double, double>> points;
      for (const ParsedRow& row : collect("coupling_msd")) {
        points.push_back({static_cast<double>(row.N), row.value});
      }
      write_curve(out_dir + "/coupling_vs_N.dat", "N", "coupling_msd", points);
      break;
    }
    case StudyKind::single_run:
      throw std::runtime_error("plot: study single-run has no rate curves to emit");
  }
}

}  // namespace nlpde
