// SPDX-License-Identifier: MIT
/**
 * @file rng.hpp
 * @brief Counter-based random streams (Philox4x64-10) and a high-accuracy
 *        inverse normal CDF.
 *
 * Every random number used by this library is a pure function of a 128-bit
 * key (master seed, replication index) and a 256-bit counter
 * (stream, substream, draw, purpose).  Consequences:
 *
 *  - results are independent of evaluation order and thread schedule;
 *  - particle j keeps the same physical noise when the ensemble size N
 *    changes, which couples a finite system to its large-N reference run in
 *    the chaos diagnostics and gives common random numbers across driver
 *    kinds;
 *  - adding replications extends the stream family without reshuffling
 *    earlier replications.
 *
 * The generator is the 10-round Philox 4x64 bijection (Salmon, Moraes,
 * Dror, Shaw, SC'11), bit-compatible with the reference implementation;
 * pinned output vectors live in the test suite.  Gaussian variates come from
 * the inverse CDF applied to the 53-bit uniform, so parallel schedules never
 * share rejection or Box-Muller cache state.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace nlpde {

// ===========================================================================
// Philox 4x64, 10 rounds
// ===========================================================================

namespace detail {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;  // golden ratio
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;  // sqrt(3) - 1

inline std::uint64_t mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(prod >> 64);
  return static_cast<std::uint64_t>(prod);
}

}  // namespace detail

/// One application of the keyed Philox4x64-10 bijection to a 256-bit counter.
inline std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                               std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    std::uint64_t hi0, hi1;
    const std::uint64_t lo0 = detail::mulhilo64(detail::kPhiloxM0, ctr[0], hi0);
    const std::uint64_t lo1 = detail::mulhilo64(detail::kPhiloxM1, ctr[2], hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// ===========================================================================
// Stream addressing
// ===========================================================================

/// Key of a stream family: one per (master seed, replication).
struct StreamKey {
  std::uint64_t master = 0;
  std::uint64_t replication = 0;
};

/// Disjoint usage domains; keeping them in the counter guarantees that e.g.
/// evaluation-point sampling can never collide with particle noise.
enum class Purpose : std::uint64_t {
  generic = 0,
  noise = 1,       ///< Brownian increments (stream = particle, substream = step)
  init = 2,        ///< initial-condition sampling (stream = particle)
  eval_points = 3, ///< error-evaluation points (stream = point index)
  spot_check = 4,  ///< assumption spot-check sampling
};

/// Raw 64 bits for counter (stream, substream, draw, purpose) under `key`.
inline std::uint64_t raw_u64(StreamKey key, std::uint64_t stream, std::uint64_t substream,
                             std::uint64_t draw, Purpose purpose) {
  const auto block = philox4x64({stream, substream, draw, static_cast<std::uint64_t>(purpose)},
                                {key.master, key.replication});
  return block[0];
}

/// Map 64 random bits to the open interval (0,1) on a 2^52 lattice:
/// u = (x >> 12) * 2^-52 + 2^-53.  Both extremes are exactly representable
/// (2^-53 and 1 - 2^-53), so 0 < u < 1 always holds and the inverse normal
/// CDF below stays finite.  A 53-bit lattice would round its top point up to
/// exactly 1.0 under ties-to-even.
inline double to_unit_interval(std::uint64_t x) {
  return static_cast<double>(x >> 12) * 0x1.0p-52 + 0x1.0p-53;
}

inline double uniform01(StreamKey key, std::uint64_t stream, std::uint64_t substream,
                        std::uint64_t draw, Purpose purpose) {
  return to_unit_interval(raw_u64(key, stream, substream, draw, purpose));
}

// ===========================================================================
// Inverse normal CDF
// ===========================================================================

/**
 * Inverse of the standard normal CDF.
 *
 * Rational initial guess (central + tail branches, ~1.2e-9 relative error)
 * refined by one Halley step of 0.5*erfc(-x/sqrt(2)) - p, giving ~1e-15
 * relative accuracy over the full range reachable from the uniforms above
 * (|result| <= ~8.2).  Arguments above 1/2 are reflected to the lower half
 * first — 1 - p is exact there — so the refinement always runs in the lower
 * tail, where the erfc evaluation is cancellation-free; this also makes
 * normal_icdf(1 - p) == -normal_icdf(p) hold bit for bit.  Pinned reference
 * values live in the test suite.
 *
 * @throws std::domain_error unless 0 < p < 1.
 */
namespace detail {

inline double normal_icdf_lower_half(double p) {
  // Requires 0 < p <= 0.5.  Rational approximation coefficients (central and
  // tail branches).
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;  // in (-0.5, 0]
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

  // One Halley refinement; skipped in the far tail where exp(x^2/2) would
  // overflow (unreachable from the uniform lattice anyway).  x <= 0 here, so
  // 0.5*erfc(-x/sqrt(2)) evaluates the CDF without cancellation.
  if (0.5 * x * x < 700.0) {
    constexpr double sqrt_two_pi = 2.5066282746310005024;
    const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = err * sqrt_two_pi * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace detail

inline double normal_icdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_icdf: argument must lie strictly between 0 and 1");
  }
  if (p == 0.5) return 0.0;
  // For p > 1/2 the complement 1 - p is exact (both operands are within a
  // factor of two), so reflection loses nothing.
  return p > 0.5 ? -detail::normal_icdf_lower_half(1.0 - p)
                 : detail::normal_icdf_lower_half(p);
}

inline double normal01(StreamKey key, std::uint64_t stream, std::uint64_t substream,
                       std::uint64_t draw, Purpose purpose) {
  return normal_icdf(uniform01(key, stream, substream, draw, purpose));
}

// ===========================================================================
// Sequential view of one stream
// ===========================================================================

/**
 * Stateful cursor over a single (key, stream, purpose) family, for consumers
 * that need "the next number" semantics (e.g. rejection sampling of the
 * initial condition).  The draw counter advances monotonically; two cursors
 * with identical construction parameters yield identical sequences.
 */
class SequentialStream {
 public:
  SequentialStream(StreamKey key, std::uint64_t stream, Purpose purpose)
      : key_(key), stream_(stream), purpose_(purpose) {}

  double next_uniform() { return uniform01(key_, stream_, 0, draw_++, purpose_); }
  double next_normal() { return normal_icdf(next_uniform()); }

  std::uint64_t draws_used() const { return draw_; }

 private:
  StreamKey key_;
  std::uint64_t stream_;
  Purpose purpose_;
  std::uint64_t draw_ = 0;
};

}  // namespace nlpde
