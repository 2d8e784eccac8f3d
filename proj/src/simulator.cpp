// SPDX-License-Identifier: MIT
#include "nlpde/simulator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nlpde/parallel.hpp"

namespace nlpde {

void driver_normals(const BrownianDriver& driver, Seed seed, int N, std::uint64_t particle,
                    std::uint64_t step, int p, double* out) {
  switch (driver.kind) {
    case DriverKind::iid: {
      const StreamKey key{seed.master, seed.replication};
      for (int i = 0; i < p; ++i) {
        out[i] = normal01(key, particle, step, static_cast<std::uint64_t>(i), Purpose::noise);
      }
      return;
    }
    case DriverKind::antithetic: {
      if (N % 2 != 0) {
        throw std::invalid_argument("driver_normals: antithetic driver requires even N");
      }
      const std::uint64_t half = static_cast<std::uint64_t>(N) / 2;
      const StreamKey key{seed.master, seed.replication};
      if (particle < half) {
        for (int i = 0; i < p; ++i) {
          out[i] = normal01(key, particle, step, static_cast<std::uint64_t>(i), Purpose::noise);
        }
      } else {
        const std::uint64_t mate = particle - half;
        for (int i = 0; i < p; ++i) {
          out[i] = -normal01(key, mate, step, static_cast<std::uint64_t>(i), Purpose::noise);
        }
      }
      return;
    }
    case DriverKind::custom: {
      if (!driver.custom) {
        throw std::invalid_argument("driver_normals: custom driver requires a callable");
      }
      driver.custom(particle, step, p, out);
      return;
    }
  }
  throw std::logic_error("driver_normals: unknown driver kind");
}

ParticleEnsemble init_ensemble(const Model& model, int N, Seed seed) {
  if (N < 1) throw std::invalid_argument("init_ensemble: N must be >= 1");
  ParticleEnsemble e;
  e.d = model.d;
  e.N = N;
  e.t = 0.0;
  e.step_index = 0;
  e.pos.resize(static_cast<std::size_t>(N) * model.d);
  e.w.assign(static_cast<std::size_t>(N), 1.0);
  const StreamKey key{seed.master, seed.replication};
  for (int j = 0; j < N; ++j) {
    SequentialStream stream(key, static_cast<std::uint64_t>(j), Purpose::init);
    model.init.sample(stream, e.pos.data() + static_cast<std::size_t>(j) * model.d);
  }
  return e;
}

namespace {

void check_finite(const ParticleEnsemble& e, int step_index) {
  for (int j = 0; j < e.N; ++j) {
    for (int i = 0; i < e.d; ++i) {
      if (!std::isfinite(e.pos[static_cast<std::size_t>(j) * e.d + i])) {
        throw std::runtime_error("numerical blow-up: non-finite position for particle " +
                                 std::to_string(j) + " at step " + std::to_string(step_index));
      }
    }
    if (!std::isfinite(e.w[static_cast<std::size_t>(j)])) {
      throw std::runtime_error("numerical blow-up: non-finite weight for particle " +
                               std::to_string(j) + " at step " + std::to_string(step_index));
    }
  }
}

}  // namespace

void step(ParticleEnsemble& e, const Model& model, const MollifierKernel& kernel,
          const TimeGrid& grid, const BrownianDriver& driver, Seed seed, WeightRule rule,
          int threads) {
  if (e.step_index >= grid.n) {
    throw std::logic_error("step: ensemble is already at the final grid node");
  }
  const int k = e.step_index;
  const int d = e.d;
  const int p = driver.p > 0 ? driver.p : model.p;
  const double t = grid.node(k);
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  const std::uint64_t step_id = static_cast<std::uint64_t>(k);

  // Freeze the estimate from the input ensemble, then evaluate it at every
  // current position before any particle moves.
  const DensityEstimate frozen = DensityEstimate::from_rows(kernel, e.t, e.pos.data(),
                                                            e.w.data(), e.N);
  std::vector<double> z(static_cast<std::size_t>(e.N));
  kde_eval_batch(frozen, e.pos.data(), e.N, z.data(), threads);

  std::vector<double> new_pos(e.pos.size());
  std::vector<double> lambda_old(static_cast<std::size_t>(e.N));

  parallel_for_ranges(static_cast<std::size_t>(e.N), threads, [&](std::size_t begin,
                                                                  std::size_t end) {
    Eigen::VectorXd noise(p);
    for (std::size_t j = begin; j < end; ++j) {
      const double* xj = e.pos.data() + j * d;
      const double zj = z[j];
      const Eigen::MatrixXd phi = model.coef.phi(t, xj, zj);
      const Eigen::VectorXd gv = model.coef.g(t, xj, zj);
      lambda_old[j] = model.coef.lambda(t, xj, zj);
      driver_normals(driver, seed, e.N, j, step_id, p, noise.data());
      Eigen::Map<Eigen::VectorXd> out(new_pos.data() + j * d, d);
      Eigen::Map<const Eigen::VectorXd> xv(xj, d);
      out = xv + sqrt_dt * (phi * noise) + dt * gv;
    }
  });

  std::vector<double> factor(static_cast<std::size_t>(e.N));
  if (rule == WeightRule::left_endpoint) {
    for (int j = 0; j < e.N; ++j) {
      factor[static_cast<std::size_t>(j)] = std::exp(lambda_old[static_cast<std::size_t>(j)] * dt);
    }
  } else {
    // Trapezoid exponent: average of Lambda at the old point and at the new
    // point under the provisional (left-rule) estimate at t_{k+1}.
    std::vector<double> w_prov(static_cast<std::size_t>(e.N));
    for (int j = 0; j < e.N; ++j) {
      w_prov[static_cast<std::size_t>(j)] =
          e.w[static_cast<std::size_t>(j)] * std::exp(lambda_old[static_cast<std::size_t>(j)] * dt);
    }
    const double t_next = grid.node(k + 1);
    const DensityEstimate provisional =
        DensityEstimate::from_rows(kernel, t_next, new_pos.data(), w_prov.data(), e.N);
    std::vector<double> z_new(static_cast<std::size_t>(e.N));
    kde_eval_batch(provisional, new_pos.data(), e.N, z_new.data(), threads);
    parallel_for_ranges(static_cast<std::size_t>(e.N), threads,
                        [&](std::size_t begin, std::size_t end) {
                          for (std::size_t j = begin; j < end; ++j) {
                            const double lam_new =
                                model.coef.lambda(t_next, new_pos.data() + j * d, z_new[j]);
                            factor[j] = std::exp(0.5 * (lambda_old[j] + lam_new) * dt);
                          }
                        });
  }

  e.pos.swap(new_pos);
  for (int j = 0; j < e.N; ++j) {
    e.w[static_cast<std::size_t>(j)] *= factor[static_cast<std::size_t>(j)];
  }
  e.step_index = k + 1;
  e.t = grid.node(k + 1);
  check_finite(e, e.step_index);
}

Trajectory run(const Model& model, const MollifierKernel& kernel, const TimeGrid& grid,
               const BrownianDriver& driver, int N, Seed seed, RecordMode record, WeightRule rule,
               int threads) {
  if (grid.n < 0 || !(grid.T > 0.0)) {
    throw std::invalid_argument("run: time grid requires T > 0 and n >= 0");
  }
  if (driver.kind == DriverKind::antithetic && N % 2 != 0) {
    throw std::invalid_argument("run: antithetic driver requires even N");
  }
  if (kernel.d != model.d) {
    throw std::invalid_argument("run: kernel dimension does not match model");
  }

  Trajectory traj;
  traj.grid = grid;
  traj.record = record;

  ParticleEnsemble e = init_ensemble(model, N, seed);
  if (record == RecordMode::full) {
    traj.snapshots.push_back(DensityEstimate::from_rows(kernel, e.t, e.pos.data(), e.w.data(), e.N));
  }
  for (int k = 0; k < grid.n; ++k) {
    step(e, model, kernel, grid, driver, seed, rule, threads);
    if (record == RecordMode::full) {
      traj.snapshots.push_back(
          DensityEstimate::from_rows(kernel, e.t, e.pos.data(), e.w.data(), e.N));
    }
  }
  if (record == RecordMode::final_only) {
    traj.snapshots.push_back(DensityEstimate::from_rows(kernel, e.t, e.pos.data(), e.w.data(), e.N));
  }
  return traj;
}

double complexity_estimate(double N, double n, double Q) { return n * N * N + Q * N; }

bool weights_within_bound(const ParticleEnsemble& ensemble, double m_lambda) {
  // A few ulps of slack: each of the n multiplicative exp factors may round.
  const double slack = 1e-12;
  const double hi = std::exp(std::min(ensemble.t * m_lambda, 700.0)) * (1.0 + slack);
  const double lo = std::exp(std::max(-ensemble.t * m_lambda, -700.0)) * (1.0 - slack);
  for (double w : ensemble.w) {
    if (!(w > 0.0) || w < lo || w > hi) return false;
  }
  return true;
}

}  // namespace nlpde
