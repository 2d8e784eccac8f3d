// SPDX-License-Identifier: MIT
/**
 * @file acceptance.cpp
 * @brief End-to-end acceptance gate for the particle solver: ten numbered
 *        criteria covering the mass invariant, the weight envelope, the
 *        exact-solution oracle, the empirical variance/bias/timestep/coupling
 *        rates, the antithetic contract, and cross-thread determinism.
 *
 * Usage: `acceptance <k>` runs criterion k in {1..10} and prints one
 * "C<k> PASS|FAIL — detail" line; with no argument all ten run in order.
 * The exit status is nonzero when any selected criterion fails.  Tolerances
 * and run sizes are pinned here on purpose: they are the contract, not knobs.
 */

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nlpde/analysis.hpp"
#include "nlpde/barenblatt.hpp"
#include "nlpde/experiment.hpp"
#include "nlpde/kernel.hpp"
#include "nlpde/simulator.hpp"

namespace {

using namespace nlpde;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

/// d=1 porous-medium benchmark with the Gaussian factor (A = (2/3) I).
BarenblattParams benchmark_case(GaussianDrift drift = GaussianDrift::restoring,
                                RadialPower radial = RadialPower::squared) {
  return make_barenblatt(1, 1.5, {0.0}, {2.0 / 3.0}, radial, drift);
}

/// d=1 conservative case (A = 0, so g = 0 and Lambda = 0 exactly).
BarenblattParams conservative_case() { return make_barenblatt(1, 1.5); }

// ---------------------------------------------------------------------------
// 1. Conservative mass invariant
// ---------------------------------------------------------------------------

Outcome criterion_1() {
  const BarenblattParams p = conservative_case();
  const double T = 1.0;
  const MollifierKernel kernel = gaussian_kernel(1, 0.3);
  const Model model = barenblatt_model(p, kernel, T);
  const int N = 2000;
  const TimeGrid grid{T, 10};

  const Trajectory traj =
      run(model, kernel, grid, BrownianDriver{}, N, Seed{2026, 0}, RecordMode::full);
  for (const DensityEstimate& snap : traj.snapshots) {
    double sum = 0.0;
    for (double w : snap.weights) sum += w;
    if (sum != static_cast<double>(N)) {
      return {false, "weight sum " + fmt(sum, "%.17g") + " != " + std::to_string(N) +
                         " at t=" + fmt(snap.time)};
    }
  }
  const double mass = kde_mass(traj.final_estimate());
  if (!(std::abs(mass - 1.0) <= 2e-3)) {
    return {false, "final quadrature mass " + fmt(mass, "%.6f") + " outside 1 +/- 2e-3"};
  }
  return {true, "weight sum == " + std::to_string(N) + " exactly at all " +
                    std::to_string(traj.snapshots.size()) + " nodes; final mass " +
                    fmt(mass, "%.6f") + " within 1 +/- 2e-3"};
}

// ---------------------------------------------------------------------------
// 2. Weight envelope under the declared source bound
// ---------------------------------------------------------------------------

Outcome criterion_2() {
  const BarenblattParams p = benchmark_case();
  const double T = 1.0;
  const MollifierKernel kernel = gaussian_kernel(1, 0.3);
  const Model model = barenblatt_model(p, kernel, T);
  const double m_lambda = model.consts.m_lambda;
  const int N = 1000;
  const TimeGrid grid{T, 10};

  int steps_checked = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    ParticleEnsemble ens = init_ensemble(model, N, Seed{777, rep});
    if (!weights_within_bound(ens, m_lambda)) {
      return {false, "initial weights outside the envelope at replication " +
                         std::to_string(rep)};
    }
    for (int k = 0; k < grid.n; ++k) {
      step(ens, model, kernel, grid, BrownianDriver{}, Seed{777, rep});
      ++steps_checked;
      if (!weights_within_bound(ens, m_lambda)) {
        return {false, "weight left [exp(-t*M), exp(t*M)] at replication " +
                           std::to_string(rep) + ", step " + std::to_string(k + 1) +
                           " (declared M=" + fmt(m_lambda) + ")"};
      }
    }
  }
  return {true, "all weights inside the exp(+/- t*M) envelope (declared M=" + fmt(m_lambda) +
                    ") across 20 replications, " + std::to_string(steps_checked) + " steps"};
}

// ---------------------------------------------------------------------------
// 3. Exact-solution oracle: second-order residual for the solving variant
// ---------------------------------------------------------------------------

Outcome criterion_3() {
  const std::vector<double> hs = {1e-2, 5e-3, 2.5e-3};
  const int points = 50;
  const double t_eval = 1.0;

  auto rms_at = [&](const BarenblattParams& p, double h) {
    const double R = support_radius(p, t_eval + 2.0);
    double acc = 0.0;
    for (int i = 0; i < points; ++i) {
      const double x = -0.8 * R + 1.6 * R * (i + 0.5) / points;
      const double r = pde_residual(p, t_eval, &x, h);
      acc += r * r;
    }
    return std::sqrt(acc / points);
  };

  std::string slopes;
  for (const BarenblattParams& p : {conservative_case(), benchmark_case()}) {
    std::vector<double> rms;
    rms.reserve(hs.size());
    for (double h : hs) rms.push_back(rms_at(p, h));
    const RateFit fit = fit_rate(hs, rms);
    if (!(fit.slope >= 1.7 && fit.slope <= 2.3)) {
      return {false, std::string("Richardson slope ") + fmt(fit.slope) + " outside [1.7, 2.3] (" +
                         (p.conservative ? "A=0" : "benchmark") + " case)"};
    }
    slopes += (slopes.empty() ? "" : ", ") + fmt(fit.slope, "%.3f");
  }

  const double solved = rms_at(benchmark_case(), hs.back());
  const BarenblattParams rejected =
      make_barenblatt(1, 1.5, {0.0}, {2.0 / 3.0}, RadialPower::linear, GaussianDrift::restoring);
  const double rej = rms_at(rejected, hs.back());
  if (!(rej > 50.0 * solved)) {
    return {false, "rejected radial variant rms " + fmt(rej) + " not > 50x the solving rms " +
                       fmt(solved)};
  }
  return {true, "Richardson slopes {" + slopes + "} in [1.7, 2.3]; rejected-variant rms " +
                    fmt(rej / solved, "%.0f") + "x the solving one"};
}

// ---------------------------------------------------------------------------
// Shared machinery for the statistical rate criteria (4-7)
// ---------------------------------------------------------------------------

struct RateCheck {
  RateFit fit;
  std::string data;  ///< "(x, y)" pairs for the detail line
};

RateCheck fit_points(const std::vector<double>& xs, const std::vector<double>& ys) {
  RateCheck out;
  out.fit = fit_rate(xs, ys);
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << (i ? " " : "") << "(" << fmt(xs[i], "%.3g") << ", " << fmt(ys[i], "%.3g") << ")";
  }
  out.data = os.str();
  return out;
}

Outcome criterion_4() {
  const BarenblattParams p = benchmark_case();
  const double T = 1.0;
  const MollifierKernel kernel = gaussian_kernel(1, 0.4);
  const Model model = barenblatt_model(p, kernel, T);
  const EvalPoints points = draw_eval_points(model.init, 1000, 4001);
  auto exact = [&p](double t, const double* x) { return exact_solution(p, t, x); };

  const std::vector<int> Ns = {250, 500, 1000, 2000, 4000};
  std::vector<double> xs, vars;
  for (int N : Ns) {
    const ReplicationBatch batch =
        run_replications(model, kernel, TimeGrid{T, 10}, N, 50, DriverKind::iid, 41, points);
    const ErrorReport rep = variance_bias_split(batch, exact, T);
    xs.push_back(static_cast<double>(N));
    vars.push_back(rep.variance);
  }
  const RateCheck rc = fit_points(xs, vars);
  const bool pass =
      rc.fit.slope >= -1.3 && rc.fit.slope <= -0.7 && rc.fit.r_squared >= 0.9;
  return {pass, "variance vs N slope " + fmt(rc.fit.slope, "%.3f") + " (window [-1.3, -0.7]), R^2 " +
                    fmt(rc.fit.r_squared, "%.4f") + "; points " + rc.data};
}

Outcome criterion_5() {
  const BarenblattParams p = benchmark_case();
  const double T = 1.0;
  const EvalPoints points = draw_eval_points(barenblatt_initial(p), 1000, 5001);
  auto exact = [&p](double t, const double* x) { return exact_solution(p, t, x); };

  const std::vector<double> eps_values = {0.2, 0.3, 0.45, 0.67, 1.0};
  std::vector<double> xs, vars;
  for (double eps : eps_values) {
    const MollifierKernel kernel = gaussian_kernel(1, eps);
    const Model model = barenblatt_model(p, kernel, T);
    const ReplicationBatch batch =
        run_replications(model, kernel, TimeGrid{T, 10}, 4000, 50, DriverKind::iid, 51, points);
    const ErrorReport rep = variance_bias_split(batch, exact, T);
    xs.push_back(eps);
    vars.push_back(rep.variance);
  }
  const RateCheck rc = fit_points(xs, vars);
  const bool pass = rc.fit.slope >= -1.4 && rc.fit.slope <= -0.6;
  return {pass, "variance vs eps slope " + fmt(rc.fit.slope, "%.3f") +
                    " (window [-1.4, -0.6], expected -d = -1); points " + rc.data};
}

Outcome criterion_6() {
  const BarenblattParams p = benchmark_case();
  const double T = 1.0;
  const EvalPoints points = draw_eval_points(barenblatt_initial(p), 1000, 6001);
  auto exact = [&p](double t, const double* x) { return exact_solution(p, t, x); };

  const std::vector<double> eps_values = {0.4, 0.55, 0.75, 1.0};
  std::vector<double> xs, biases;
  std::string ses;
  for (double eps : eps_values) {
    const MollifierKernel kernel = gaussian_kernel(1, eps);
    const Model model = barenblatt_model(p, kernel, T);
    const ReplicationBatch batch =
        run_replications(model, kernel, TimeGrid{T, 10}, 8000, 50, DriverKind::iid, 61, points);
    const ErrorReport rep = variance_bias_split(batch, exact, T);
    xs.push_back(eps);
    biases.push_back(rep.bias_sq);
    ses += (ses.empty() ? "" : " ") + fmt(rep.bias_sq_se, "%.2g");
  }
  const RateCheck rc = fit_points(xs, biases);
  const bool pass = rc.fit.slope >= 3.0 && rc.fit.slope <= 5.0;
  return {pass, "bias_sq vs eps slope " + fmt(rc.fit.slope, "%.3f") +
                    " (window [3.0, 5.0], expected ~4); points " + rc.data + "; SEs " + ses};
}

Outcome criterion_7() {
  const BarenblattParams p = benchmark_case();
  const double T = 1.0;
  const MollifierKernel kernel = gaussian_kernel(1, 0.3);
  const Model model = barenblatt_model(p, kernel, T);
  const EvalPoints points = draw_eval_points(model.init, 1000, 7001);

  const std::vector<int> n_values = {5, 10, 20, 40, 80};
  const std::vector<TimestepPoint> study = timestep_study(
      model, kernel, T, 2000, 50, DriverKind::iid, 71, points, n_values, 320);

  std::vector<double> xs, biases, vars;
  std::string data;
  for (const TimestepPoint& pt : study) {
    xs.push_back(static_cast<double>(pt.n));
    biases.push_back(pt.bias_sq);
    vars.push_back(pt.variance);
    data += (data.empty() ? "(" : " (") + std::to_string(pt.n) + ", " +
            fmt(pt.bias_sq, "%.3g") + " +/- " + fmt(pt.bias_sq_se, "%.2g") + ")";
  }
  for (double b : biases) {
    if (!(b > 0.0)) {
      return {false, "a floored bias point makes the log-log fit impossible; bias points " + data};
    }
  }
  const RateCheck bias_rc = fit_points(xs, biases);
  const RateCheck var_rc = fit_points(xs, vars);
  const bool bias_ok = bias_rc.fit.slope >= -2.5 && bias_rc.fit.slope <= -1.5;
  const bool var_ok = var_rc.fit.slope >= -0.5 && var_rc.fit.slope <= 0.5;
  return {bias_ok && var_ok,
          "bias_sq vs n slope " + fmt(bias_rc.fit.slope, "%.3f") +
              " (window [-2.5, -1.5]); variance slope " + fmt(var_rc.fit.slope, "%.3f") +
              " (window [-0.5, 0.5]); bias points " + data};
}

// ---------------------------------------------------------------------------
// 8. Chaos-propagation coupling rate + reference stability
// ---------------------------------------------------------------------------

Outcome criterion_8() {
  const BarenblattParams p = benchmark_case();
  const double T = 1.0;
  const MollifierKernel kernel = gaussian_kernel(1, 0.3);
  const Model model = barenblatt_model(p, kernel, T);
  const std::vector<int> Ns = {250, 500, 1000, 2000};

  const std::vector<CouplingPoint> base =
      coupling_diagnostic(model, kernel, T, 10, DriverKind::iid, 81, Ns, 8000);
  std::vector<double> xs, msd;
  for (const CouplingPoint& pt : base) {
    xs.push_back(static_cast<double>(pt.N));
    msd.push_back(pt.mean_sq_sup_dist);
  }
  const RateCheck rc = fit_points(xs, msd);
  if (!(rc.fit.slope >= -1.4 && rc.fit.slope <= -0.6)) {
    return {false, "coupling slope " + fmt(rc.fit.slope, "%.3f") +
                       " outside [-1.4, -0.6]; points " + rc.data};
  }

  const std::vector<CouplingPoint> doubled =
      coupling_diagnostic(model, kernel, T, 10, DriverKind::iid, 81, Ns, 16000);
  double worst_shift = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double shift =
        std::abs(doubled[i].mean_sq_sup_dist / base[i].mean_sq_sup_dist - 1.0);
    worst_shift = std::max(worst_shift, shift);
  }
  if (!(worst_shift < 0.25)) {
    return {false, "reference-stability shift " + fmt(100.0 * worst_shift, "%.1f") +
                       "% >= 25% when the proxy doubles (slope was " +
                       fmt(rc.fit.slope, "%.3f") + ")"};
  }
  return {true, "coupling slope " + fmt(rc.fit.slope, "%.3f") +
                    " in [-1.4, -0.6]; worst per-N shift " + fmt(100.0 * worst_shift, "%.1f") +
                    "% < 25% at doubled proxy; points " + rc.data};
}

// ---------------------------------------------------------------------------
// 9. Antithetic contract: bit-exact mirroring + variance non-inferiority
// ---------------------------------------------------------------------------

Outcome criterion_9() {
  const int N = 1000;
  const Seed seed{91, 0};
  BrownianDriver anti;
  anti.kind = DriverKind::antithetic;
  for (std::uint64_t k = 0; k < 10; ++k) {
    for (std::uint64_t j = 0; j < static_cast<std::uint64_t>(N) / 2; ++j) {
      double a = 0.0, b = 0.0;
      driver_normals(anti, seed, N, j, k, 1, &a);
      driver_normals(anti, seed, N, j + N / 2, k, 1, &b);
      if (std::bit_cast<std::uint64_t>(b) != std::bit_cast<std::uint64_t>(-a)) {
        return {false, "paired increment not a bit-exact negation at particle " +
                           std::to_string(j) + ", step " + std::to_string(k)};
      }
    }
  }

  const BarenblattParams p = benchmark_case();
  const double T = 1.0;
  const MollifierKernel kernel = gaussian_kernel(1, 0.4);
  const Model model = barenblatt_model(p, kernel, T);
  const EvalPoints points = draw_eval_points(model.init, 1000, 9001);
  auto exact = [&p](double t, const double* x) { return exact_solution(p, t, x); };

  const ReplicationBatch iid_batch = run_replications(model, kernel, TimeGrid{T, 10}, N, 50,
                                                      DriverKind::iid, 91, points);
  const ReplicationBatch anti_batch = run_replications(model, kernel, TimeGrid{T, 10}, N, 50,
                                                       DriverKind::antithetic, 91, points);
  const double var_iid = variance_bias_split(iid_batch, exact, T).variance;
  const double var_anti = variance_bias_split(anti_batch, exact, T).variance;
  if (!(var_anti <= 1.1 * var_iid)) {
    return {false, "antithetic variance " + fmt(var_anti, "%.3g") + " > 1.1x iid variance " +
                       fmt(var_iid, "%.3g") + " at matched cost"};
  }
  return {true, "5000 paired increments bit-exactly negated; antithetic variance " +
                    fmt(var_anti, "%.3g") + " <= 1.1x iid variance " + fmt(var_iid, "%.3g")};
}

// ---------------------------------------------------------------------------
// 10. Determinism: bit-identical CSV across repeats and thread counts
// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome criterion_10() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "nlpde_acceptance_10";
  std::error_code ec;
  fs::remove_all(root, ec);

  ExperimentConfig cfg;
  cfg.study = StudyKind::variance_vs_N;
  cfg.N_values = {250, 500, 1000};
  cfg.eps_values = {0.4};
  cfg.n_values = {10};
  cfg.M = 8;
  cfg.Q = 250;
  cfg.seed = 99;

  const std::vector<std::pair<std::string, int>> runs = {
      {"threads1", 1}, {"threads3", 3}, {"threads1_repeat", 1}};
  std::vector<std::string> contents;
  for (const auto& [tag, threads] : runs) {
    ExperimentConfig c = cfg;
    c.threads = threads;
    c.out_dir = (root / tag).string();
    if (run_study(c) != 0) return {false, "run_study failed for " + tag};
    contents.push_back(slurp(fs::path(c.out_dir) / "variance-vs-N.csv"));
    if (contents.back().empty()) return {false, "empty CSV for " + tag};
  }
  if (contents[1] != contents[0]) {
    return {false, "CSV differs between 1 and 3 threads"};
  }
  if (contents[2] != contents[0]) {
    return {false, "CSV differs between repeated identical runs"};
  }
  return {true, "CSV byte-identical across a repeat and across 1 vs 3 threads (" +
                    std::to_string(contents[0].size()) + " bytes)"};
}

using CriterionFn = Outcome (*)();
constexpr CriterionFn kCriteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                                     criterion_5, criterion_6, criterion_7, criterion_8,
                                     criterion_9, criterion_10};

}  // namespace

int main(int argc, char** argv) {
  int first = 1, last = 10;
  if (argc > 1) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > 10) {
      std::fprintf(stderr, "usage: %s [criterion 1..10]\n", argv[0]);
      return 2;
    }
    first = last = k;
  }

  bool all_pass = true;
  for (int k = first; k <= last; ++k) {
    Outcome outcome;
    try {
      outcome = kCriteria[k - 1]();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("C%d %s — %s\n", k, outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
