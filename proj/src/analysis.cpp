// SPDX-License-Identifier: MIT
#include "nlpde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlpde {

EvalPoints draw_eval_points(const InitialLaw& law, int Q, std::uint64_t seed,
                            double density_floor) {
  if (Q < 1) throw std::invalid_argument("draw_eval_points: Q must be >= 1");
  if (!law.density) {
    throw std::invalid_argument("draw_eval_points: initial law carries no density");
  }
  EvalPoints pts;
  pts.d = law.d;
  pts.Q = Q;
  pts.x.resize(static_cast<std::size_t>(Q) * law.d);
  pts.v0.resize(static_cast<std::size_t>(Q));
  const StreamKey key{seed, 0};
  for (int j = 0; j < Q; ++j) {
    SequentialStream stream(key, static_cast<std::uint64_t>(j), Purpose::eval_points);
    double* out = pts.x.data() + static_cast<std::size_t>(j) * law.d;
    constexpr int kMaxResample = 1'000'000;
    int tries = 0;
    for (;;) {
      law.sample(stream, out);
      const double v0 = law.density(out);
      if (v0 >= density_floor) {
        pts.v0[static_cast<std::size_t>(j)] = v0;
        break;
      }
      if (++tries >= kMaxResample) {
        throw std::runtime_error("draw_eval_points: resampling cap exceeded at the density floor");
      }
    }
  }
  return pts;
}

ReplicationBatch run_replications(const Model& model, const MollifierKernel& kernel,
                                  const TimeGrid& grid, int N, int M, DriverKind driver_kind,
                                  std::uint64_t master_seed, const EvalPoints& points,
                                  int threads, WeightRule rule, std::uint64_t group) {
  if (M < 1) throw std::invalid_argument("run_replications: M must be >= 1");
  if (points.d != model.d) {
    throw std::invalid_argument("run_replications: evaluation points dimension mismatch");
  }
  ReplicationBatch batch;
  batch.M = M;
  batch.Q = points.Q;
  batch.N = N;
  batch.n = grid.n;
  batch.epsilon = kernel.epsilon;
  batch.seed = master_seed;
  batch.points = points;
  batch.estimates.reserve(static_cast<std::size_t>(M));
  batch.values.resize(static_cast<std::size_t>(M) * points.Q);

  BrownianDriver driver;
  driver.kind = driver_kind;
  for (int r = 0; r < M; ++r) {
    const Seed seed{master_seed, (group << 32) | static_cast<std::uint64_t>(r)};
    Trajectory traj = run(model, kernel, grid, driver, N, seed, RecordMode::final_only, rule,
                          threads);
    kde_eval_batch(traj.final_estimate(), points.x.data(), points.Q,
                   batch.values.data() + static_cast<std::size_t>(r) * points.Q, threads);
    batch.estimates.push_back(std::move(traj.snapshots.back()));
  }
  return batch;
}

namespace {

struct Decomposition {
  double mise = 0.0, variance = 0.0, bias_raw = 0.0;
};

/// Core estimator on per-point replication sums; used for both the full
/// sample and the jackknife leave-one-out recomputations.
Decomposition decompose(int M, int Q, const double* a /*sum_r u_rj*/,
                        const double* b /*sum_r u_rj^2*/, const std::vector<double>& target,
                        const std::vector<double>& v0) {
  Decomposition out;
  double mise = 0.0, variance = 0.0, braw = 0.0;
  for (int j = 0; j < Q; ++j) {
    const double w = 1.0 / v0[static_cast<std::size_t>(j)];
    const double vj = target[static_cast<std::size_t>(j)];
    const double aj = a[j], bj = b[j];
    // sum_r (u_rj - v_j)^2 = b_j - 2 v_j a_j + M v_j^2; the expanded form can
    // go fractionally negative through cancellation when the true sum is 0,
    // so clamp each (nonnegative by construction) per-point term.
    mise += std::max(0.0, bj - 2.0 * vj * aj + M * vj * vj) * w;
    const double ubar = aj / M;
    if (M >= 2) {
      const double s2 = std::max(0.0, (bj - aj * aj / M) / (M - 1));
      variance += s2 * w;
      braw += (ubar - vj) * (ubar - vj) * w;
    }
  }
  out.mise = mise / (static_cast<double>(M) * Q);
  if (M >= 2) {
    out.variance = variance / Q;
    out.bias_raw = braw / Q - out.variance / M;
  }
  return out;
}

double jackknife_se(const std::vector<double>& leave_one_out) {
  const std::size_t M = leave_one_out.size();
  if (M < 2) return 0.0;
  double mean = 0.0;
  for (double v : leave_one_out) mean += v;
  mean /= static_cast<double>(M);
  double ss = 0.0;
  for (double v : leave_one_out) ss += (v - mean) * (v - mean);
  return std::sqrt(ss * (static_cast<double>(M) - 1.0) / static_cast<double>(M));
}

}  // namespace

ErrorReport error_decomposition(const ReplicationBatch& batch, const std::vector<double>& target) {
  const int M = batch.M, Q = batch.Q;
  if (M < 1) throw std::invalid_argument("error_decomposition: M must be >= 1");
  if (static_cast<int>(target.size()) != Q) {
    throw std::invalid_argument("error_decomposition: target length must equal Q");
  }

  std::vector<double> a(static_cast<std::size_t>(Q), 0.0), b(static_cast<std::size_t>(Q), 0.0);
  for (int r = 0; r < M; ++r) {
    const double* row = batch.values.data() + static_cast<std::size_t>(r) * Q;
    for (int j = 0; j < Q; ++j) {
      a[static_cast<std::size_t>(j)] += row[j];
      b[static_cast<std::size_t>(j)] += row[j] * row[j];
    }
  }

  const Decomposition full = decompose(M, Q, a.data(), b.data(), target, batch.points.v0);

  ErrorReport report;
  report.mise = full.mise;
  report.variance = full.variance;
  report.bias_sq_raw = full.bias_raw;
  report.bias_sq = std::max(full.bias_raw, 0.0);

  if (M >= 2) {
    std::vector<double> loo_mise(static_cast<std::size_t>(M));
    std::vector<double> loo_var(static_cast<std::size_t>(M));
    std::vector<double> loo_bias(static_cast<std::size_t>(M));
    std::vector<double> am(static_cast<std::size_t>(Q)), bm(static_cast<std::size_t>(Q));
    for (int r = 0; r < M; ++r) {
      const double* row = batch.values.data() + static_cast<std::size_t>(r) * Q;
      for (int j = 0; j < Q; ++j) {
        am[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(j)] - row[j];
        bm[static_cast<std::size_t>(j)] = b[static_cast<std::size_t>(j)] - row[j] * row[j];
      }
      const Decomposition loo =
          decompose(M - 1, Q, am.data(), bm.data(), target, batch.points.v0);
      loo_mise[static_cast<std::size_t>(r)] = loo.mise;
      loo_var[static_cast<std::size_t>(r)] = loo.variance;
      loo_bias[static_cast<std::size_t>(r)] = loo.bias_raw;
    }
    report.mise_se = jackknife_se(loo_mise);
    report.variance_se = jackknife_se(loo_var);
    report.bias_sq_se = jackknife_se(loo_bias);
  }
  return report;
}

namespace {

std::vector<double> target_values(const ReplicationBatch& batch,
                                  const std::function<double(double, const double*)>& exact,
                                  double t) {
  std::vector<double> target(static_cast<std::size_t>(batch.Q));
  for (int j = 0; j < batch.Q; ++j) {
    target[static_cast<std::size_t>(j)] =
        exact(t, batch.points.x.data() + static_cast<std::size_t>(j) * batch.points.d);
  }
  return target;
}

}  // namespace

ErrorReport mise_estimate(const ReplicationBatch& batch,
                          const std::function<double(double, const double*)>& exact, double t) {
  return error_decomposition(batch, target_values(batch, exact, t));
}

ErrorReport variance_bias_split(const ReplicationBatch& batch,
                                const std::function<double(double, const double*)>& exact,
                                double t) {
  if (batch.M < 2) {
    throw std::invalid_argument("variance_bias_split: requires M >= 2 replications");
  }
  return error_decomposition(batch, target_values(batch, exact, t));
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_rate: size mismatch");
  if (x.size() < 3) throw std::invalid_argument("fit_rate: requires at least 3 points");
  RateFit fit;
  fit.x = x;
  fit.y = y;
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::domain_error("fit_rate: coordinates must be positive for a log-log fit");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("fit_rate: abscissae must be distinct");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = fit.intercept + fit.slope * lx[i];
    ss_res += (ly[i] - pred) * (ly[i] - pred);
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

std::vector<TimestepPoint> timestep_study(const Model& model, const MollifierKernel& kernel,
                                          double T, int N, int M, DriverKind driver_kind,
                                          std::uint64_t master_seed, const EvalPoints& points,
                                          const std::vector<int>& n_values, int n_ref,
                                          int threads, WeightRule rule) {
  if (M < 2) throw std::invalid_argument("timestep_study: requires M >= 2");
  if (n_values.empty()) throw std::invalid_argument("timestep_study: empty n list");
  for (int n : n_values) {
    if (n < 1 || n > n_ref || n_ref % n != 0) {
      throw std::invalid_argument(
          "timestep_study: every n must divide n_ref and satisfy n <= n_ref (grids must nest)");
    }
  }

  constexpr std::uint64_t kRefGroup = 0xFFFF;
  const int Q = points.Q;
  const ReplicationBatch ref = run_replications(model, kernel, TimeGrid{T, n_ref}, N, M,
                                                driver_kind, master_seed, points, threads, rule,
                                                kRefGroup);

  std::vector<TimestepPoint> out;
  out.reserve(n_values.size());
  for (std::size_t idx = 0; idx < n_values.size(); ++idx) {
    const int n = n_values[idx];
    const ReplicationBatch test = run_replications(model, kernel, TimeGrid{T, n}, N, M,
                                                   driver_kind, master_seed, points, threads,
                                                   rule, idx + 1);

    // Paired statistic over the two independent batches.
    auto stat = [&](int m_eff, const double* ax, const double* bx, const double* ay,
                    const double* by) {
      double vx = 0.0, vy = 0.0, cross = 0.0;
      for (int j = 0; j < Q; ++j) {
        const double w = 1.0 / points.v0[static_cast<std::size_t>(j)];
        const double s2x = std::max(0.0, (bx[j] - ax[j] * ax[j] / m_eff) / (m_eff - 1));
        const double s2y = std::max(0.0, (by[j] - ay[j] * ay[j] / m_eff) / (m_eff - 1));
        vx += s2x * w;
        vy += s2y * w;
        const double diff = ax[j] / m_eff - ay[j] / m_eff;
        cross += diff * diff * w;
      }
      vx /= Q;
      vy /= Q;
      cross /= Q;
      const double variance = vx + vy;
      return std::pair<double, double>{variance, cross - variance / m_eff};
    };

    std::vector<double> ax(static_cast<std::size_t>(Q), 0.0), bx(ax), ay(ax), by(ax);
    for (int r = 0; r < M; ++r) {
      const double* xr = test.values.data() + static_cast<std::size_t>(r) * Q;
      const double* yr = ref.values.data() + static_cast<std::size_t>(r) * Q;
      for (int j = 0; j < Q; ++j) {
        ax[static_cast<std::size_t>(j)] += xr[j];
        bx[static_cast<std::size_t>(j)] += xr[j] * xr[j];
        ay[static_cast<std::size_t>(j)] += yr[j];
        by[static_cast<std::size_t>(j)] += yr[j] * yr[j];
      }
    }
    const auto [variance, bias_raw] = stat(M, ax.data(), bx.data(), ay.data(), by.data());

    std::vector<double> loo_var(static_cast<std::size_t>(M)), loo_bias(static_cast<std::size_t>(M));
    if (M >= 3) {
      std::vector<double> axm(static_cast<std::size_t>(Q)), bxm(axm), aym(axm), bym(axm);
      for (int r = 0; r < M; ++r) {
        const double* xr = test.values.data() + static_cast<std::size_t>(r) * Q;
        const double* yr = ref.values.data() + static_cast<std::size_t>(r) * Q;
        for (int j = 0; j < Q; ++j) {
          axm[static_cast<std::size_t>(j)] = ax[static_cast<std::size_t>(j)] - xr[j];
          bxm[static_cast<std::size_t>(j)] = bx[static_cast<std::size_t>(j)] - xr[j] * xr[j];
          aym[static_cast<std::size_t>(j)] = ay[static_cast<std::size_t>(j)] - yr[j];
          bym[static_cast<std::size_t>(j)] = by[static_cast<std::size_t>(j)] - yr[j] * yr[j];
        }
        const auto [v_loo, b_loo] = stat(M - 1, axm.data(), bxm.data(), aym.data(), bym.data());
        loo_var[static_cast<std::size_t>(r)] = v_loo;
        loo_bias[static_cast<std::size_t>(r)] = b_loo;
      }
    }

    TimestepPoint point;
    point.n = n;
    point.variance = variance;
    point.bias_sq_raw = bias_raw;
    point.bias_sq = std::max(bias_raw, 0.0);
    if (M >= 3) {
      point.variance_se = jackknife_se(loo_var);
      point.bias_sq_se = jackknife_se(loo_bias);
    }
    out.push_back(point);
  }
  return out;
}

std::vector<CouplingPoint> coupling_diagnostic(const Model& model, const MollifierKernel& kernel,
                                               double T, int n, DriverKind driver_kind,
                                               std::uint64_t master_seed,
                                               const std::vector<int>& N_values, int N_ref,
                                               int threads, WeightRule rule) {
  if (N_values.empty()) throw std::invalid_argument("coupling_diagnostic: empty N list");
  int n_max = 0, n_min = N_values.front();
  for (int N : N_values) {
    if (N < 1) throw std::invalid_argument("coupling_diagnostic: N must be >= 1");
    n_max = std::max(n_max, N);
    n_min = std::min(n_min, N);
  }
  if (N_ref <= 0) N_ref = 4 * n_max;
  if (N_ref < n_max) {
    throw std::invalid_argument("coupling_diagnostic: N_ref must be at least max(N_values)");
  }

  const TimeGrid grid{T, n};
  BrownianDriver driver;
  driver.kind = driver_kind;
  const Seed seed{master_seed, 0};

  const Trajectory ref = run(model, kernel, grid, driver, N_ref, seed, RecordMode::full, rule,
                             threads);
  const int K = n_min;  // tracked particles, matched across every run
  const int d = model.d;

  std::vector<CouplingPoint> out;
  out.reserve(N_values.size());
  for (int N : N_values) {
    const Trajectory traj = run(model, kernel, grid, driver, N, seed, RecordMode::full, rule,
                                threads);
    double mean = 0.0, msq = 0.0;
    for (int i = 0; i < K; ++i) {
      double sup = 0.0;
      for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        double dist2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double delta =
              traj.snapshots[k].position(i, c) - ref.snapshots[k].position(i, c);
          dist2 += delta * delta;
        }
        sup = std::max(sup, dist2);
      }
      mean += sup;
      msq += sup * sup;
    }
    mean /= K;
    msq /= K;
    CouplingPoint point;
    point.N = N;
    point.mean_sq_sup_dist = mean;
    point.se = K >= 2 ? std::sqrt(std::max(0.0, msq - mean * mean) / (K - 1)) : 0.0;
    out.push_back(point);
  }
  return out;
}

}  // namespace nlpde
