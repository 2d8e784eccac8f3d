// SPDX-License-Identifier: MIT
/**
 * @file nlpde_main.cpp
 * @brief Command-line front end: run studies, reshape CSVs for plotting, and
 *        self-check the bundled porous-medium benchmark.
 */

#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nlpde/analysis.hpp"
#include "nlpde/barenblatt.hpp"
#include "nlpde/experiment.hpp"

namespace {

/// Collect explicitly supplied flags as (key, value) overrides so precedence
/// stays defaults < config file < command line.
struct OverrideCollector {
  std::vector<std::pair<std::string, std::string>> pairs;

  void add_option(CLI::App* app, const std::string& flag, const std::string& key,
                  const std::string& help) {
    auto holder = std::make_shared<std::string>();
    app->add_option_function<std::string>(
           flag,
           [this, key, holder](const std::string& value) {
             *holder = value;
             pairs.emplace_back(key, value);
           },
           help)
        ->type_name("TEXT");
  }
};

int command_run(const std::string& config_path, const OverrideCollector& overrides) {
  const nlpde::ExperimentConfig cfg = nlpde::parse_config(config_path, overrides.pairs);
  {
    // Warn early when the requested job is very large; the estimate counts
    // kernel evaluations (n*N^2 interaction + Q*N evaluation per run).
    double worst = 0.0;
    for (int N : cfg.N_values) {
      for (int n : cfg.n_values) {
        worst = std::max(worst,
                         nlpde::complexity_estimate(N, std::max(n, cfg.n_ref), cfg.Q) * cfg.M);
      }
    }
    if (worst > 5e11) {
      std::fprintf(stderr, "warning: roughly %.2g kernel evaluations requested\n", worst);
    }
  }
  return nlpde::run_study(cfg);
}

int command_plot(const std::string& csv_path, const std::string& study,
                 const std::string& out_dir) {
  const nlpde::StudyKind kind = nlpde::study_from_string(study);
  std::string dir = out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("NLPDE_OUT");
    dir = env && *env ? env : "out";
  }
  nlpde::emit_plotdata(csv_path, kind, dir);
  std::printf("wrote plot data for study %s to %s\n", study.c_str(), dir.c_str());
  return 0;
}

/// Richardson slope of the strong-form residual over a shrinking stencil.
/// Returns the fitted slope, or NaN when the residual is already at rounding
/// level (in which case `rms_out` tells the caller it converged).
double residual_slope(const nlpde::BarenblattParams& params, double t,
                      const std::vector<std::vector<double>>& points, double* rms_out) {
  const std::vector<double> hs = {1e-2, 5e-3, 2.5e-3};
  std::vector<double> rms(hs.size(), 0.0);
  for (std::size_t k = 0; k < hs.size(); ++k) {
    double acc = 0.0;
    for (const auto& x : points) {
      const double r = nlpde::pde_residual(params, t, x.data(), hs[k]);
      acc += r * r;
    }
    rms[k] = std::sqrt(acc / static_cast<double>(points.size()));
  }
  if (rms_out) *rms_out = rms.back();
  for (double r : rms) {
    if (!(r > 1e-13)) return std::nan("");
  }
  const nlpde::RateFit fit = nlpde::fit_rate(hs, rms);
  return fit.slope;
}

int command_check() {
  // Fixed smoke-test configuration: d=1, m=3/2, A=(2/3)I, epsilon=0.3, T=1.
  const int d = 1;
  const double m = 1.5;
  const double a = 2.0 / 3.0;
  const double eps = 0.3;
  const double T = 1.0;
  int failures = 0;

  // --- kernel normalization at a single point -----------------------------
  {
    const nlpde::MollifierKernel kernel = nlpde::gaussian_kernel(1, 1.0);
    const double zero = 0.0;
    const double got = kernel.evaluate(&zero);
    const double want = 1.0 / std::sqrt(2.0 * M_PI);
    const bool ok = std::abs(got - want) < 1e-15;
    std::printf("[%s] kernel point value: K(0) = %.17g (expect %.17g)\n", ok ? "ok" : "FAIL",
                got, want);
    if (!ok) ++failures;
  }

  // --- strong-form residual for all four coefficient variants -------------
  const std::vector<double> mu = {0.0};
  const std::vector<double> A = {a};
  std::vector<std::vector<double>> points;
  {
    const nlpde::BarenblattParams probe = nlpde::make_barenblatt(
        d, m, mu, A, nlpde::RadialPower::squared, nlpde::GaussianDrift::restoring);
    const double R = nlpde::support_radius(probe, 1.0 + 2.0);
    for (int i = 0; i < 20; ++i) {
      const double x = -0.8 * R + 1.6 * R * (i + 0.5) / 20.0;
      points.push_back({x});
    }
  }
  struct Variant {
    const char* label;
    nlpde::RadialPower radial;
    nlpde::GaussianDrift drift;
    bool expect_solution;
  };
  const Variant variants[] = {
      {"squared radial, restoring drift", nlpde::RadialPower::squared,
       nlpde::GaussianDrift::restoring, true},
      {"squared radial, repelling drift", nlpde::RadialPower::squared,
       nlpde::GaussianDrift::repelling, false},
      {"linear radial, restoring drift", nlpde::RadialPower::linear,
       nlpde::GaussianDrift::restoring, false},
      {"linear radial, repelling drift", nlpde::RadialPower::linear,
       nlpde::GaussianDrift::repelling, false},
  };
  for (const Variant& v : variants) {
    const nlpde::BarenblattParams params =
        nlpde::make_barenblatt(d, m, mu, A, v.radial, v.drift);
    double rms = 0.0;
    const double slope = residual_slope(params, 1.0, points, &rms);
    const bool solves = std::isnan(slope) ? rms < 1e-10 : (slope > 1.5 && rms < 1e-3);
    const bool ok = solves == v.expect_solution;
    std::printf("[%s] residual, %s: rms=%.3g slope=%.2f -> %s\n", ok ? "ok" : "FAIL", v.label,
                rms, std::isnan(slope) ? 0.0 : slope,
                solves ? "solves the target equation" : "does NOT solve the target equation");
    if (!ok) ++failures;
  }

  // --- calibrated constants + random spot check ----------------------------
  {
    const nlpde::BarenblattParams params = nlpde::make_barenblatt(
        d, m, mu, A, nlpde::RadialPower::squared, nlpde::GaussianDrift::restoring);
    const nlpde::MollifierKernel kernel = nlpde::gaussian_kernel(d, eps);
    const nlpde::AssumptionConstants consts = nlpde::barenblatt_constants(params, kernel, T);
    std::printf("calibrated constants: M_K=%.6g L_K=%.6g M_Lambda=%.6g L_Phi=%.6g L_g=%.6g "
                "L_Lambda=%.6g z_cal=%.6g\n",
                consts.m_k, consts.l_k, consts.m_lambda, consts.l_phi, consts.l_g,
                consts.l_lambda, consts.z_calibrated);

    const nlpde::Model model = nlpde::barenblatt_model(params, kernel, T);
    const double R = nlpde::support_radius(params, 2.0);
    nlpde::Box box;
    box.lo.assign(static_cast<std::size_t>(d), -R);
    box.hi.assign(static_cast<std::size_t>(d), R);
    const nlpde::SpotCheckReport report = nlpde::check_assumptions(model, 2000, box, T, 424242);
    const bool ok = report.ok();
    std::printf("[%s] randomized bound check: %zu samples, %zu violations\n", ok ? "ok" : "FAIL",
                static_cast<std::size_t>(report.samples), report.violations.size());
    for (std::size_t i = 0; i < report.violations.size() && i < 5; ++i) {
      const nlpde::SpotCheckViolation& viol = report.violations[i];
      std::printf("    %s observed=%.6g declared=%.6g at t=%.3g z=%.6g\n",
                  viol.quantity.c_str(), viol.observed, viol.declared, viol.t, viol.z);
    }
    if (!ok) ++failures;
  }

  std::printf(failures == 0 ? "check: all good\n" : "check: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted interacting-particle solver for nonlinear PDEs"};
  app.require_subcommand(1);

  // --- run ----------------------------------------------------------------
  CLI::App* run_cmd = app.add_subcommand("run", "execute a study and write CSV + summary");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "key = value configuration file");
  OverrideCollector overrides;
  overrides.add_option(run_cmd, "--study", "study",
                       "variance-vs-N | variance-vs-eps | bias-vs-eps | timestep | coupling | "
                       "single-run");
  overrides.add_option(run_cmd, "--testcase", "testcase", "barenblatt | conservative");
  overrides.add_option(run_cmd, "--d", "d", "space dimension");
  overrides.add_option(run_cmd, "--m", "m", "porous-medium exponent (> 1)");
  overrides.add_option(run_cmd, "--mu", "mu", "Gaussian factor center (comma list)");
  overrides.add_option(run_cmd, "--A", "A", "Gaussian factor matrix: scalar a (= a*I) or d*d list");
  overrides.add_option(run_cmd, "--T", "T", "time horizon");
  overrides.add_option(run_cmd, "--N", "N", "particle counts (comma list)");
  overrides.add_option(run_cmd, "--eps", "epsilon", "kernel bandwidths (comma list)");
  overrides.add_option(run_cmd, "--n", "n", "time step counts (comma list)");
  overrides.add_option(run_cmd, "--n-ref", "n_ref", "reference step count (timestep study)");
  overrides.add_option(run_cmd, "--M", "M", "independent replications");
  overrides.add_option(run_cmd, "--Q", "Q", "evaluation points");
  overrides.add_option(run_cmd, "--seed", "seed", "master seed");
  overrides.add_option(run_cmd, "--driver", "driver", "iid | antithetic");
  overrides.add_option(run_cmd, "--weight-rule", "weight_rule", "left | trapezoid");
  overrides.add_option(run_cmd, "--radial", "radial", "squared | linear");
  overrides.add_option(run_cmd, "--drift", "drift", "restoring | repelling");
  overrides.add_option(run_cmd, "--threads", "threads", "worker threads");
  overrides.add_option(run_cmd, "--out", "out", "output directory (default $NLPDE_OUT or ./out)");

  // --- plot ---------------------------------------------------------------
  CLI::App* plot_cmd = app.add_subcommand("plot", "reshape a study CSV into log-log .dat curves");
  std::string csv_path, plot_study, plot_out;
  plot_cmd->add_option("--csv", csv_path, "CSV produced by `run`")->required();
  plot_cmd->add_option("--study", plot_study, "study kind the CSV belongs to")->required();
  plot_cmd->add_option("--out", plot_out, "output directory (default $NLPDE_OUT or ./out)");

  // --- check --------------------------------------------------------------
  CLI::App* check_cmd =
      app.add_subcommand("check", "self-test the bundled benchmark coefficients and bounds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return command_run(config_path, overrides);
    if (plot_cmd->parsed()) return command_plot(csv_path, plot_study, plot_out);
    if (check_cmd->parsed()) return command_check();
  } catch (const std::invalid_argument& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 2;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 1;
  }
  return 0;
}
