// SPDX-License-Identifier: MIT
/**
 * @file quadrature.hpp
 * @brief Quadrature utilities: adaptive Gauss-Kronrod in 1-D, tensorized
 *        midpoint rule for d <= 3.
 *
 * The midpoint rule is deliberately simple: on smooth rapidly decaying
 * integrands (Gaussians, compactly supported profiles) its Euler-Maclaurin
 * error terms vanish and convergence is superalgebraic, which is more than
 * enough for the mass checks and normalization constants here.
 */
#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace nlpde {

/// Adaptive Gauss-Kronrod (15-point) on [a, b].
inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           double tol = 1e-10, unsigned max_depth = 15) {
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol);
}

/**
 * Tensorized midpoint rule over the box [lo, hi] in d = lo.size() dimensions.
 * The total cell budget is capped; cells per axis = floor(max_cells^(1/d)).
 *
 * @throws std::invalid_argument for d == 0, d > 3, or inconsistent bounds.
 */
inline double integrate_box_midpoint(const std::function<double(const double*)>& f,
                                     const std::vector<double>& lo, const std::vector<double>& hi,
                                     std::size_t max_cells = 2'000'000) {
  const std::size_t d = lo.size();
  if (d == 0 || d > 3 || hi.size() != d) {
    throw std::invalid_argument("integrate_box_midpoint: supports 1 <= d <= 3 with matching bounds");
  }
  std::size_t cells_per_axis = max_cells;
  if (d == 2) {
    cells_per_axis = static_cast<std::size_t>(std::sqrt(static_cast<double>(max_cells)));
  } else if (d == 3) {
    cells_per_axis = static_cast<std::size_t>(std::cbrt(static_cast<double>(max_cells)));
  }
  if (cells_per_axis < 1) cells_per_axis = 1;

  std::vector<double> h(d), x(d);
  double cell_volume = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(hi[i] > lo[i])) {
      throw std::invalid_argument("integrate_box_midpoint: hi must exceed lo on every axis");
    }
    h[i] = (hi[i] - lo[i]) / static_cast<double>(cells_per_axis);
    cell_volume *= h[i];
  }

  std::vector<std::size_t> idx(d, 0);
  double sum = 0.0, comp = 0.0;  // Kahan accumulation in odometer order
  while (true) {
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = lo[i] + (static_cast<double>(idx[i]) + 0.5) * h[i];
    }
    const double y = f(x.data()) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;

    std::size_t axis = 0;
    while (axis < d && ++idx[axis] == cells_per_axis) {
      idx[axis] = 0;
      ++axis;
    }
    if (axis == d) break;
  }
  return sum * cell_volume;
}

/// Dimension-dispatching box integral: Gauss-Kronrod when d == 1, midpoint otherwise.
inline double integrate_box(const std::function<double(const double*)>& f,
                            const std::vector<double>& lo, const std::vector<double>& hi,
                            double tol_1d = 1e-10, std::size_t max_cells = 2'000'000) {
  if (lo.size() == 1) {
    return integrate_1d([&f](double x) { return f(&x); }, lo[0], hi[0], tol_1d);
  }
  return integrate_box_midpoint(f, lo, hi, max_cells);
}

}  // namespace nlpde
