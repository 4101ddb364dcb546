#pragma once

// Monte Carlo reference values for lognormal SABR: terminal forwards,
// finite-horizon martingale defect, explosion probability of the auxiliary
// volatility process and Monte Carlo implied volatilities.
//
// Paths are simulated in fixed batches with seeds derived from (seed, batch
// index) and reduced in batch order, so results do not depend on the number
// of worker threads.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sabr/sabr_model.hpp"

namespace sabr {

enum class Scheme { log_euler };

struct PathConfig {
  std::size_t n_paths = 100000;
  std::size_t n_steps = 250;  // per year; more are used when nu^2 T is large
  std::uint64_t seed = 1;
  double vol_cap = 1e6;
  Scheme scheme = Scheme::log_euler;
  /// Pairs each path with its mirror (negated normals); n_paths must be even.
  bool antithetic = false;
  /// Worker threads; 0 means std::thread::hardware_concurrency().
  unsigned threads = 0;

  void validate() const;
};

struct DefectEstimate {
  double point_estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double horizon = 0.0;
};

struct TerminalSamples {
  std::vector<double> forward;        // F_T per path, 0 for exploded paths
  std::vector<unsigned char> exploded;
  std::size_t n_exploded = 0;
  std::size_t n_steps = 0;            // time steps actually used
  bool antithetic = false;            // paths 2i and 2i+1 are mirrors
};

/// Number of time steps used over [0, T]: max(n_steps T, 100 nu^2 T, 20).
std::size_t effective_steps(double expiry, const SabrParams& theta, const PathConfig& cfg);

/// Simulates F_T: alpha as exact geometric Brownian motion per step, ln F by
/// Euler with alpha frozen over the step and correlation rho between the
/// drivers. A path whose alpha exceeds vol_cap is marked exploded and F = 0.
TerminalSamples simulate_sabr_terminal(double f0, double expiry, const SabrParams& theta,
                                       const PathConfig& cfg);

/// d(T) = 1 - E[F_T] / F_0.
///
/// Each path contributes E[F_T | alpha path] / F_0
///   = exp(rho (alpha_T - alpha_0) / nu - rho^2 / 2 int_0^T alpha_t^2 dt),
/// which has the same expectation as F_T / F_0 but does not carry the heavy
/// tail of the simulated forward. The integral uses the trapezoid rule on the
/// exact alpha path with max(n_steps T, 25 nu^2 T, 20) steps. For rho = 0
/// every contribution is exactly 1.
DefectEstimate mc_defect(double f0, double expiry, const SabrParams& theta, const PathConfig& cfg);

/// P(tau <= T) for dv = nu v dW + nu rho v^2 dt, v_0 = alpha, with explosion
/// declared when v reaches vol_cap. Simulated by Euler in ln v; steps shrink
/// so the drift nu rho v dt per step stays small as v grows. Paths that fall
/// below the level where the remaining explosion probability is 1e-4 are
/// stopped early.
DefectEstimate mc_explosion_probability(const SabrParams& theta, double expiry,
                                        const PathConfig& cfg);

struct McImpliedVol {
  double vol = 0.0;
  double lo = 0.0;  // vol at price - 1 SE (0 when that price is below intrinsic)
  double hi = 0.0;  // vol at price + 1 SE
  double price = 0.0;
  double price_std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Discounted payoff average of simulated terminal forwards, inverted with
/// bsm_implied_vol. An out-of-bounds price is retried once with 4x paths
/// before NoSolution is thrown. Requires |ln(K / F0)| <= 1.
McImpliedVol mc_implied_vol(double f0, const VanillaSpec& spec, const SabrParams& theta,
                            const PathConfig& cfg);

/// Same, reusing precomputed terminal samples (no retry).
McImpliedVol mc_implied_vol(const TerminalSamples& paths, double f0, const VanillaSpec& spec);

}  // namespace sabr
