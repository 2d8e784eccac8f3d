// SPDX-License-Identifier: MIT
/**
 * @file analysis.hpp
 * @brief Error estimation across replications: importance-sampled MISE with
 *        a variance / squared-bias decomposition, jackknife standard errors,
 *        log-log rate fitting, the time-refinement study, and the coupling
 *        (chaos-propagation) diagnostic.
 *
 * The MISE of an estimate u against the exact solution v at time t is
 * approximated over Q shared evaluation points X_j ~ v(0, .) with importance
 * weights 1 / v(0, X_j):
 *
 *   mise     = (1/(M Q)) sum_i sum_j |u_i(X_j) - v(X_j)|^2 / v0(X_j)
 *   variance = (1/Q) sum_j s2_j / v0(X_j)            (s2_j unbiased, M-1)
 *   bias_sq  = (1/Q) sum_j |ubar_j - v_j|^2 / v0(X_j) - variance / M,
 *
 * floored at 0 with the raw value retained.  These satisfy the exact
 * algebraic identity  mise = variance + bias_sq_raw,  so the decomposition
 * is consistent by construction.  Standard errors are leave-one-replication-
 * out jackknife estimates.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nlpde/kernel.hpp"
#include "nlpde/model.hpp"
#include "nlpde/simulator.hpp"

namespace nlpde {

/// Shared error-evaluation points with their initial-density values.
struct EvalPoints {
  int d = 0;
  int Q = 0;
  std::vector<double> x;   ///< row-major Q x d
  std::vector<double> v0;  ///< v0[j] = v(0, X_j), all >= density floor
};

/**
 * Draw Q points i.i.d. from the initial law.  Points where the density falls
 * below `density_floor` (possible only for laws whose sampler support is
 * wider than the floor set) are resampled at generation time, so importance
 * weights stay bounded.  Deterministic in (seed, point index).
 * @throws std::invalid_argument if the law carries no density.
 */
EvalPoints draw_eval_points(const InitialLaw& law, int Q, std::uint64_t seed,
                            double density_floor = 1e-12);

/**
 * M independent replications of one configuration: the final-time density
 * estimates and their values at the shared evaluation points.
 * Replication r uses Seed{master, (group << 32) | r}, so adding replications
 * extends the family without reshuffling earlier ones.
 */
struct ReplicationBatch {
  int M = 0;
  int Q = 0;
  int N = 0;
  int n = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  EvalPoints points;
  std::vector<DensityEstimate> estimates;  ///< M final-time snapshots
  std::vector<double> values;              ///< M x Q: values[r*Q + j] = u_r(X_j)
};

ReplicationBatch run_replications(const Model& model, const MollifierKernel& kernel,
                                  const TimeGrid& grid, int N, int M, DriverKind driver_kind,
                                  std::uint64_t master_seed, const EvalPoints& points,
                                  int threads = 1, WeightRule rule = WeightRule::left_endpoint,
                                  std::uint64_t group = 0);

struct ErrorReport {
  double mise = 0.0, mise_se = 0.0;
  double variance = 0.0, variance_se = 0.0;
  double bias_sq = 0.0, bias_sq_se = 0.0;
  double bias_sq_raw = 0.0;  ///< before flooring at 0
};

/// Full decomposition against target values v_j = v(t, X_j) (length Q).
/// @throws std::invalid_argument if M < 2 or sizes mismatch.
ErrorReport error_decomposition(const ReplicationBatch& batch,
                                const std::vector<double>& target);

/// MISE + jackknife standard error (M >= 1) against the exact solution at
/// time t;  `exact(t, x)` is the solution callable.
ErrorReport mise_estimate(const ReplicationBatch& batch,
                          const std::function<double(double, const double*)>& exact, double t);

/// Variance / squared-bias split (requires M >= 2); also fills mise fields.
ErrorReport variance_bias_split(const ReplicationBatch& batch,
                                const std::function<double(double, const double*)>& exact,
                                double t);

struct RateFit {
  std::vector<double> x, y;
  double slope = 0.0;
  double intercept = 0.0;  ///< in natural-log coordinates
  double r_squared = 0.0;
};

/// Ordinary least squares on (ln x, ln y).
/// @throws std::invalid_argument for fewer than 3 points;
/// @throws std::domain_error for nonpositive coordinates.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Time-refinement study
// ---------------------------------------------------------------------------

struct TimestepPoint {
  int n = 0;
  double variance = 0.0, variance_se = 0.0;
  double bias_sq = 0.0, bias_sq_se = 0.0;
  double bias_sq_raw = 0.0;
};

/**
 * For each n in n_values, M replications at n steps are compared against M
 * independent replications at n_ref steps (the reference batch is shared
 * across all n).  With ubar / uref the per-point replication means and Vn /
 * Vref the per-batch variance components,
 *   variance = Vn + Vref,
 *   bias_sq  = ||ubar - uref||^2_imp - (Vn + Vref)/M   (floored at 0),
 * which isolates the time-discretization bias.  Standard errors are paired
 * jackknife estimates.  Reference replications use an independent stream
 * group, as the decomposition requires.
 *
 * @throws std::invalid_argument unless every n divides n_ref and n <= n_ref.
 */
std::vector<TimestepPoint> timestep_study(const Model& model, const MollifierKernel& kernel,
                                          double T, int N, int M, DriverKind driver_kind,
                                          std::uint64_t master_seed, const EvalPoints& points,
                                          const std::vector<int>& n_values, int n_ref,
                                          int threads = 1,
                                          WeightRule rule = WeightRule::left_endpoint);

// ---------------------------------------------------------------------------
// Chaos-propagation coupling diagnostic
// ---------------------------------------------------------------------------

struct CouplingPoint {
  int N = 0;
  double mean_sq_sup_dist = 0.0;  ///< mean over tracked particles of sup-in-time squared distance
  double se = 0.0;                ///< standard error over tracked particles
};

/**
 * Runs the system at each N in N_values and at N_ref (default 4 * max N).
 * Because particle j's noise and initial draw depend only on j, the first
 * min(N_values) particles are pathwise matched across all runs; the
 * reference run is the proxy for the limit system.  Reports, per N, the mean
 * over matched particles of the squared sup-in-time distance.
 */
std::vector<CouplingPoint> coupling_diagnostic(const Model& model, const MollifierKernel& kernel,
                                               double T, int n, DriverKind driver_kind,
                                               std::uint64_t master_seed,
                                               const std::vector<int>& N_values, int N_ref = 0,
                                               int threads = 1,
                                               WeightRule rule = WeightRule::left_endpoint);

}  // namespace nlpde
