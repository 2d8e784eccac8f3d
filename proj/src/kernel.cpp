// SPDX-License-Identifier: MIT
#include "nlpde/kernel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

#include "nlpde/parallel.hpp"
#include "nlpde/quadrature.hpp"

namespace nlpde {

namespace {

double gaussian_norm_const(int d, double epsilon) {
  // (2*pi)^{-d/2} * eps^{-d}
  return std::pow(2.0 * std::numbers::pi, -0.5 * d) * std::pow(epsilon, -d);
}

void validate_kernel(const MollifierKernel& k) {
  if (k.d < 1) throw std::invalid_argument("MollifierKernel: dimension must be >= 1");
  if (!(k.epsilon > 0.0)) throw std::invalid_argument("MollifierKernel: epsilon must be > 0");
  if (k.family == KernelFamily::custom && !k.profile) {
    throw std::invalid_argument("MollifierKernel: custom family requires a profile callable");
  }
}

}  // namespace

double MollifierKernel::sup() const {
  if (family == KernelFamily::gaussian) return gaussian_norm_const(d, epsilon);
  if (!(profile_sup > 0.0)) {
    throw std::invalid_argument("MollifierKernel: custom family requires declared profile_sup");
  }
  return profile_sup * std::pow(epsilon, -d);
}

double MollifierKernel::grad_sup() const {
  if (family == KernelFamily::gaussian) {
    // max |(K^eps)'| attained at |x| = eps: (2*pi)^{-d/2} e^{-1/2} eps^{-(d+1)}
    return gaussian_norm_const(d, epsilon) * std::exp(-0.5) / epsilon;
  }
  if (!(profile_grad_sup > 0.0)) {
    throw std::invalid_argument(
        "MollifierKernel: custom family requires declared profile_grad_sup");
  }
  return profile_grad_sup * std::pow(epsilon, -(d + 1));
}

double MollifierKernel::evaluate(const double* diff) const {
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += diff[i] * diff[i];
  if (cutoff_radius > 0.0 && r2 > cutoff_radius * cutoff_radius) return 0.0;
  if (family == KernelFamily::gaussian) {
    return gaussian_norm_const(d, epsilon) * std::exp(-0.5 * r2 / (epsilon * epsilon));
  }
  if (!profile) {
    throw std::invalid_argument("MollifierKernel: custom family requires a profile callable");
  }
  std::vector<double> u(d);
  for (int i = 0; i < d; ++i) u[i] = diff[i] / epsilon;
  return profile(u.data()) * std::pow(epsilon, -d);
}

MollifierKernel gaussian_kernel(int d, double epsilon) {
  MollifierKernel k;
  k.family = KernelFamily::gaussian;
  k.d = d;
  k.epsilon = epsilon;
  validate_kernel(k);
  return k;
}

DensityEstimate DensityEstimate::from_rows(const MollifierKernel& kernel, double time,
                                           const double* positions_rowmajor,
                                           const double* weights, int N) {
  validate_kernel(kernel);
  if (N < 1) {
    throw std::invalid_argument("DensityEstimate: empty particle set (N = 0) is rejected");
  }
  DensityEstimate est;
  est.kernel = kernel;
  est.time = time;
  est.d = kernel.d;
  est.N = N;
  est.weights.assign(weights, weights + N);
  est.pos_components.resize(static_cast<std::size_t>(est.d) * N);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < est.d; ++i) {
      est.pos_components[static_cast<std::size_t>(i) * N + j] =
          positions_rowmajor[static_cast<std::size_t>(j) * est.d + i];
    }
  }
  return est;
}

double DensityEstimate::max_weight() const {
  double m = 0.0;
  for (double w : weights) m = std::max(m, w);
  return m;
}

namespace {

/// Gaussian fast path: vectorized squared distances and exponentials into a
/// thread-local buffer, then one strict index-order compensated sum.  The
/// value of element j never depends on any other element, so the result is
/// a pure function of (est, y) — the determinism contract.
double kde_eval_gaussian(const DensityEstimate& est, const double* y) {
  const int N = est.N;
  const double inv_two_eps2 = 0.5 / (est.kernel.epsilon * est.kernel.epsilon);

  Eigen::ArrayXd args(N);
  {
    Eigen::Map<const Eigen::ArrayXd> comp0(est.pos_components.data(), N);
    args = (y[0] - comp0).square();
    for (int i = 1; i < est.d; ++i) {
      Eigen::Map<const Eigen::ArrayXd> comp(est.pos_components.data() +
                                                static_cast<std::size_t>(i) * N,
                                            N);
      args += (y[i] - comp).square();
    }
  }

  if (est.kernel.cutoff_radius > 0.0) {
    // Mask by pushing the squared distance to +inf (exp then gives exactly 0)
    // so the masked and unmasked cases share one exp pipeline: lanes the
    // cutoff keeps are bit-identical to a cutoff-free evaluation.
    const double r2max = est.kernel.cutoff_radius * est.kernel.cutoff_radius;
    args = (args <= r2max)
               .select(args, Eigen::ArrayXd::Constant(
                                 N, std::numeric_limits<double>::infinity()));
  }

  args *= -inv_two_eps2;
  Eigen::Map<const Eigen::ArrayXd> w(est.weights.data(), N);
  Eigen::ArrayXd vals = args.exp() * w;

  double sum = 0.0, comp = 0.0;
  const double* v = vals.data();
  for (int j = 0; j < N; ++j) {
    const double yj = v[j] - comp;
    const double t = sum + yj;
    comp = (t - sum) - yj;
    sum = t;
  }
  return gaussian_norm_const(est.d, est.kernel.epsilon) * sum / static_cast<double>(N);
}

double kde_eval_custom(const DensityEstimate& est, const double* y) {
  const int N = est.N;
  std::vector<double> diff(est.d);
  double sum = 0.0, comp = 0.0;
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < est.d; ++i) diff[i] = y[i] - est.position(j, i);
    const double yj = est.weights[j] * est.kernel.evaluate(diff.data()) - comp;
    const double t = sum + yj;
    comp = (t - sum) - yj;
    sum = t;
  }
  return sum / static_cast<double>(N);
}

}  // namespace

double kde_eval(const DensityEstimate& est, const double* y) {
  if (est.N < 1) {
    throw std::invalid_argument("kde_eval: empty particle set (N = 0) is rejected");
  }
  if (est.kernel.family == KernelFamily::gaussian) return kde_eval_gaussian(est, y);
  return kde_eval_custom(est, y);
}

void kde_eval_batch(const DensityEstimate& est, const double* ys_rowmajor, int Q, double* out,
                    int threads) {
  if (est.N < 1) {
    throw std::invalid_argument("kde_eval_batch: empty particle set (N = 0) is rejected");
  }
  if (Q < 1) throw std::invalid_argument("kde_eval_batch: Q must be >= 1");
  parallel_for_ranges(static_cast<std::size_t>(Q), threads,
                      [&](std::size_t begin, std::size_t end) {
                        for (std::size_t q = begin; q < end; ++q) {
                          out[q] = kde_eval(est, ys_rowmajor + q * est.d);
                        }
                      });
}

double kde_lipschitz_bound(const DensityEstimate& est) {
  return est.kernel.grad_sup() * est.max_weight();
}

double kde_mass(const DensityEstimate& est, double pad_sigmas) {
  const double pad = pad_sigmas * est.kernel.epsilon;
  std::vector<double> lo(est.d), hi(est.d);
  for (int i = 0; i < est.d; ++i) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (int j = 0; j < est.N; ++j) {
      const double x = est.position(j, i);
      mn = std::min(mn, x);
      mx = std::max(mx, x);
    }
    lo[i] = mn - pad;
    hi[i] = mx + pad;
  }
  if (est.d > 3) {
    throw std::invalid_argument("kde_mass: quadrature supports d <= 3");
  }
  return integrate_box([&est](const double* x) { return kde_eval(est, x); }, lo, hi);
}

}  // namespace nlpde
