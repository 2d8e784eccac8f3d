// SPDX-License-Identifier: MIT
#include "nlpde/model.hpp"

#include <cmath>
#include <stdexcept>

namespace nlpde {

namespace {

void require(bool cond, const char* message) {
  if (!cond) throw std::invalid_argument(message);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

Model make_model(Coefficients coef, AssumptionConstants consts, InitialLaw init) {
  require(coef.d >= 1, "make_model: spatial dimension d must be >= 1");
  require(coef.p >= 1, "make_model: noise dimension p must be >= 1");
  require(static_cast<bool>(coef.phi), "make_model: missing diffusion callable phi");
  require(static_cast<bool>(coef.g), "make_model: missing drift callable g");
  require(static_cast<bool>(coef.lambda), "make_model: missing weighting callable lambda");
  require(static_cast<bool>(init.sample), "make_model: missing initial-law sampler");
  require(init.d == coef.d, "make_model: initial-law dimension does not match coefficients");
  require(finite_nonneg(consts.m_lambda) && finite_nonneg(consts.l_lambda) &&
              finite_nonneg(consts.l_phi) && finite_nonneg(consts.l_g) &&
              finite_nonneg(consts.l_k) && finite_nonneg(consts.m_k),
          "make_model: assumption constants must be nonnegative and finite");
  require(finite_nonneg(consts.z_calibrated),
          "make_model: calibrated z-range must be nonnegative and finite");

  // Probe at (t=0, x=0, z=0): dimensions must agree and values must be
  // finite (the coefficients are required to be finite along x = 0).
  std::vector<double> origin(static_cast<std::size_t>(coef.d), 0.0);
  const Eigen::MatrixXd phi0 = coef.phi(0.0, origin.data(), 0.0);
  require(phi0.rows() == coef.d && phi0.cols() == coef.p,
          "make_model: phi output dimensions do not match declared d x p");
  require(phi0.allFinite(), "make_model: phi is not finite at (0, 0, 0)");
  const Eigen::VectorXd g0 = coef.g(0.0, origin.data(), 0.0);
  require(g0.size() == coef.d, "make_model: g output length does not match declared d");
  require(g0.allFinite(), "make_model: g is not finite at (0, 0, 0)");
  require(std::isfinite(coef.lambda(0.0, origin.data(), 0.0)),
          "make_model: lambda is not finite at (0, 0, 0)");

  Model m;
  m.d = coef.d;
  m.p = coef.p;
  m.coef = std::move(coef);
  m.consts = consts;
  m.init = std::move(init);
  return m;
}

SpotCheckReport check_assumptions(const Model& model, std::size_t n_samples, const Box& box,
                                  double t_max, std::uint64_t seed, double z_max) {
  if (n_samples < 1) throw std::invalid_argument("check_assumptions: n_samples must be >= 1");
  const int d = model.d;
  if (static_cast<int>(box.lo.size()) != d || static_cast<int>(box.hi.size()) != d) {
    throw std::invalid_argument("check_assumptions: box dimension does not match model");
  }

  if (z_max <= 0.0) {
    z_max = model.consts.z_calibrated > 0.0
                ? model.consts.z_calibrated
                : model.consts.m_k * std::exp(std::min(t_max * model.consts.m_lambda, 700.0));
  }

  constexpr double kFdStep = 1e-5;
  constexpr double kSlack = 1.05;  // declared constants may be exceeded by at most 5%

  SpotCheckReport report;
  report.samples = n_samples;
  report.t_max = t_max;
  report.z_max = z_max;

  const StreamKey key{seed, 0};
  std::vector<double> x(static_cast<std::size_t>(d));
  std::vector<double> xp(x), xm(x);

  auto record = [&](const char* quantity, double t, const std::vector<double>& at, double z,
                    double observed, double declared) {
    report.violations.push_back({quantity, t, at, z, observed, declared});
  };

  for (std::size_t s = 0; s < n_samples; ++s) {
    std::uint64_t draw = 0;
    const double t = t_max * uniform01(key, s, 0, draw++, Purpose::spot_check);
    for (int i = 0; i < d; ++i) {
      const double u = uniform01(key, s, 0, draw++, Purpose::spot_check);
      x[static_cast<std::size_t>(i)] = box.lo[i] + u * (box.hi[i] - box.lo[i]);
    }
    const double z = z_max * uniform01(key, s, 0, draw++, Purpose::spot_check);

    // --- direct bound on |Lambda| -------------------------------------
    const double lam = model.coef.lambda(t, x.data(), z);
    if (std::abs(lam) > model.consts.m_lambda * (1.0 + 1e-12)) {
      record("m_lambda", t, x, z, std::abs(lam), model.consts.m_lambda);
    }

    // --- x-direction difference quotients ------------------------------
    for (int i = 0; i < d; ++i) {
      xp = x;
      xm = x;
      xp[static_cast<std::size_t>(i)] += kFdStep;
      xm[static_cast<std::size_t>(i)] -= kFdStep;
      const double span = 2.0 * kFdStep;

      const double q_phi =
          (model.coef.phi(t, xp.data(), z) - model.coef.phi(t, xm.data(), z)).norm() / span;
      if (q_phi > model.consts.l_phi * kSlack) record("l_phi", t, x, z, q_phi, model.consts.l_phi);

      const double q_g =
          (model.coef.g(t, xp.data(), z) - model.coef.g(t, xm.data(), z)).norm() / span;
      if (q_g > model.consts.l_g * kSlack) record("l_g", t, x, z, q_g, model.consts.l_g);

      const double q_lam =
          std::abs(model.coef.lambda(t, xp.data(), z) - model.coef.lambda(t, xm.data(), z)) / span;
      if (q_lam > model.consts.l_lambda * kSlack) {
        record("l_lambda", t, x, z, q_lam, model.consts.l_lambda);
      }
    }

    // --- z-direction difference quotient (clamped at z = 0) ------------
    {
      const double z_hi = z + kFdStep;
      const double z_lo = std::max(z - kFdStep, 0.0);
      const double span = z_hi - z_lo;

      const double q_phi =
          (model.coef.phi(t, x.data(), z_hi) - model.coef.phi(t, x.data(), z_lo)).norm() / span;
      if (q_phi > model.consts.l_phi * kSlack) record("l_phi", t, x, z, q_phi, model.consts.l_phi);

      const double q_g =
          (model.coef.g(t, x.data(), z_hi) - model.coef.g(t, x.data(), z_lo)).norm() / span;
      if (q_g > model.consts.l_g * kSlack) record("l_g", t, x, z, q_g, model.consts.l_g);

      const double q_lam =
          std::abs(model.coef.lambda(t, x.data(), z_hi) - model.coef.lambda(t, x.data(), z_lo)) /
          span;
      if (q_lam > model.consts.l_lambda * kSlack) {
        record("l_lambda", t, x, z, q_lam, model.consts.l_lambda);
      }
    }
  }
  return report;
}

}  // namespace nlpde
