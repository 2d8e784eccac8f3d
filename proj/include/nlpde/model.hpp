// SPDX-License-Identifier: MIT
/**
 * @file model.hpp
 * @brief Coefficient functions of the nonlinear SDE, their regularity
 *        metadata, and the initial law — decoupled from any particular PDE
 *        instance.
 *
 * A model bundles:
 *   - Phi(t, x, z): d x p diffusion matrix,
 *   - g(t, x, z):   drift vector in R^d,
 *   - Lambda(t, x, z): scalar weighting (source) function,
 * where z is the scalar density value fed back from the estimator, plus the
 * declared boundedness/Lipschitz constants those coefficients are supposed
 * to satisfy, and a sampler/density pair for the initial condition.
 *
 * Coefficients must be pure: repeated evaluation at identical arguments
 * returns bit-identical results, and evaluation is reentrant (the per-step
 * particle loop calls them concurrently).
 */
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlpde/rng.hpp"

namespace nlpde {

struct Coefficients {
  int d = 1;  ///< spatial dimension
  int p = 1;  ///< driving-noise dimension
  std::function<Eigen::MatrixXd(double t, const double* x, double z)> phi;
  std::function<Eigen::VectorXd(double t, const double* x, double z)> g;
  std::function<double(double t, const double* x, double z)> lambda;
};

/**
 * Declared regularity constants (all nonnegative and finite):
 *   m_lambda — sup |Lambda|;
 *   l_lambda, l_phi, l_g — centered finite-difference Lipschitz bounds in
 *     (x, z), i.e. maxima of the same difference quotients the spot checker
 *     below evaluates (step 1e-5): for coefficients with fractional-power z
 *     dependence the true derivative blows up at z = 0 while these
 *     quotient bounds stay finite;
 *   l_k, m_k — gradient sup and sup of the mollifier in use;
 *   z_calibrated — upper end of the z-range the constants were calibrated
 *     on (0 = unset; used as the default spot-check range).
 */
struct AssumptionConstants {
  double m_lambda = 0.0;
  double l_lambda = 0.0;
  double l_phi = 0.0;
  double l_g = 0.0;
  double l_k = 0.0;
  double m_k = 0.0;
  double z_calibrated = 0.0;
};

/// Initial condition: a deterministic per-stream sampler plus an optional
/// density v0 (empty function = unknown density).
struct InitialLaw {
  int d = 1;
  std::function<void(SequentialStream& stream, double* out)> sample;
  std::function<double(const double* x)> density;  ///< optional
};

struct Model {
  Coefficients coef;
  AssumptionConstants consts;
  InitialLaw init;
  int d = 1;
  int p = 1;
};

/**
 * Validate and assemble a model.
 *
 * Checks: positive dimensions, all coefficient callables present, sampler
 * present, initial-law dimension agreement, nonnegative finite constants,
 * and a probe evaluation at (t=0, x=0, z=0) confirming Phi returns d x p,
 * g returns length d, and all probed values are finite.
 *
 * @throws std::invalid_argument on any violation.
 */
Model make_model(Coefficients coef, AssumptionConstants consts, InitialLaw init);

/// Axis-aligned box in R^d.
struct Box {
  std::vector<double> lo, hi;
};

struct SpotCheckViolation {
  std::string quantity;  ///< "m_lambda", "l_phi", "l_g", "l_lambda"
  double t = 0.0;
  std::vector<double> x;
  double z = 0.0;
  double observed = 0.0;
  double declared = 0.0;
};

struct SpotCheckReport {
  std::size_t samples = 0;
  double t_max = 0.0;
  double z_max = 0.0;
  std::vector<SpotCheckViolation> violations;
  bool ok() const { return violations.empty(); }
};

/**
 * Randomized spot check of the declared assumption constants.
 *
 * Samples n_samples points (t, x, z) uniformly in [0, t_max] x box x
 * [0, z_max] and records: any |Lambda| > m_lambda, and any centered
 * finite-difference Lipschitz quotient (step 1e-5, per x-coordinate and in
 * z with clamping at z = 0) exceeding the declared l_phi / l_g / l_lambda
 * by more than 5%.  Report-only: never throws on a violation.
 *
 * z_max = 0 resolves to consts.z_calibrated when set, else to
 * m_k * exp(t_max * m_lambda) — the maximal density value the estimator can
 * attain under the declared weight bound.
 */
SpotCheckReport check_assumptions(const Model& model, std::size_t n_samples, const Box& box,
                                  double t_max, std::uint64_t seed, double z_max = 0.0);

}  // namespace nlpde
