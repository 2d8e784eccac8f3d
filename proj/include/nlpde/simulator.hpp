// SPDX-License-Identifier: MIT
/**
 * @file simulator.hpp
 * @brief Time-discretized weighted interacting particle system with
 *        pluggable Brownian drivers (iid, antithetic, custom).
 *
 * One step from t_k to t_{k+1} = t_k + dt, with u_k the density estimate
 * frozen from the INPUT ensemble (every particle reads the same snapshot):
 *
 *   x_{k+1}^j = x_k^j + Phi(t_k, x_k^j, u_k(x_k^j)) * sqrt(dt) * e_k^j
 *                     + g(t_k, x_k^j, u_k(x_k^j)) * dt
 *   G_{k+1}^j = G_k^j * exp(Lambda(t_k, x_k^j, u_k(x_k^j)) * dt)
 *
 * The weight exponent uses the left endpoint (old position, old estimate);
 * a trapezoid variant exists behind a flag for rate exploration and is
 * excluded from the default studies.
 *
 * Determinism: given (seed, replication, N, grid, driver kind) the full
 * trajectory is bit-reproducible for any thread count.  Particle j's noise
 * and initial draw depend only on j, never on N, so runs at different N are
 * pathwise coupled (used by the chaos diagnostics).
 */
#pragma once

#include <cstdint>
#include <vector>

#include "nlpde/kernel.hpp"
#include "nlpde/model.hpp"
#include "nlpde/rng.hpp"

namespace nlpde {

/// Uniform grid 0 = t_0 < ... < t_n = T.  n = 0 is the degenerate grid
/// holding only the initial time.
struct TimeGrid {
  double T = 1.0;
  int n = 1;
  double dt() const { return n > 0 ? T / n : 0.0; }
  double node(int k) const { return k >= n ? T : dt() * k; }
};

enum class DriverKind { iid, antithetic, custom };

/**
 * Brownian increment source.  `p = 0` means "use the model's noise
 * dimension".  For the antithetic kind the ensemble is split in halves
 * (N must be even) and particle j >= N/2 receives the bit-exact negation of
 * particle j - N/2's draws; particles j < N/2 see the same physical draws
 * as the iid kind (common random numbers across driver kinds).
 */
struct BrownianDriver {
  DriverKind kind = DriverKind::iid;
  int p = 0;
  /// custom kind only: fill `out[0..p)` with standard normal draws for
  /// (particle, step).  The correlation structure is NOT validated; see the
  /// module notes in the README.
  std::function<void(std::uint64_t particle, std::uint64_t step, int p, double* out)> custom;
};

/// Master seed and replication index; the pair keys all random streams.
struct Seed {
  std::uint64_t master = 0;
  std::uint64_t replication = 0;
};

enum class RecordMode { final_only, full };
enum class WeightRule { left_endpoint, trapezoid };

struct ParticleEnsemble {
  int d = 0;
  int N = 0;
  double t = 0.0;
  int step_index = 0;
  std::vector<double> pos;  ///< row-major N x d
  std::vector<double> w;    ///< N weights
};

struct Trajectory {
  TimeGrid grid;
  RecordMode record = RecordMode::final_only;
  /// full: n+1 snapshots (every node);  final_only: 1 snapshot (at T).
  std::vector<DensityEstimate> snapshots;
  const DensityEstimate& final_estimate() const { return snapshots.back(); }
};

/// Draw the p standard normals for (particle j, step k) under the driver.
/// @throws std::invalid_argument for antithetic with odd N or custom without callable.
void driver_normals(const BrownianDriver& driver, Seed seed, int N, std::uint64_t particle,
                    std::uint64_t step, int p, double* out);

/// Sample N initial positions i.i.d. from the model's initial law; all
/// weights start at exactly 1.  @throws std::invalid_argument for N < 1.
ParticleEnsemble init_ensemble(const Model& model, int N, Seed seed);

/**
 * Advance the ensemble by one step of the scheme above.
 * @throws std::logic_error   if the ensemble is already at the final node.
 * @throws std::runtime_error on numerical blow-up, naming particle and step.
 */
void step(ParticleEnsemble& ensemble, const Model& model, const MollifierKernel& kernel,
          const TimeGrid& grid, const BrownianDriver& driver, Seed seed,
          WeightRule rule = WeightRule::left_endpoint, int threads = 1);

/// init_ensemble + n steps.  Deterministic given (seed, N, grid, kernel, driver kind).
Trajectory run(const Model& model, const MollifierKernel& kernel, const TimeGrid& grid,
               const BrownianDriver& driver, int N, Seed seed,
               RecordMode record = RecordMode::final_only,
               WeightRule rule = WeightRule::left_endpoint, int threads = 1);

/// Predicted kernel-evaluation count n*N^2 + Q*N (used by the CLI to warn on
/// large jobs).
double complexity_estimate(double N, double n, double Q);

/// True when every weight of the ensemble lies in
/// [exp(-t*m_lambda), exp(t*m_lambda)] up to a few ulps of rounding slack.
bool weights_within_bound(const ParticleEnsemble& ensemble, double m_lambda);

}  // namespace nlpde
