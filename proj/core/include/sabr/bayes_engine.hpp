#pragma once

// Bayesian calibration of lognormal SABR to one smile slice: posterior,
// MAP search, adaptive Metropolis sampling and posterior summaries.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sabr/market_data.hpp"
#include "sabr/nelder_mead.hpp"
#include "sabr/sabr_model.hpp"

namespace sabr {

using Matrix5d = Eigen::Matrix<double, 5, 5>;

/// One vol point (1% = 0.01) squared, in decimal vol units.
inline constexpr double kPercentPointVariance = 1e-4;

struct PosteriorSpec {
  MarketSlice slice;
  /// Noise covariance in decimal-vol^2 units. Defaults to the identity in
  /// percentage points, i.e. 1e-4 * I.
  Matrix5d noise_covariance = kPercentPointVariance * Matrix5d::Identity();
  /// Replaces the hard bid-ask bracket with a quadratic penalty on the excess
  /// residual. Not part of the reference model; used to rescue empty supports.
  bool soft_constraint = false;
  double soft_penalty_weight = 1e4;
  SecondOrderCoefficient sigma2;

  /// Throws InvalidInput if the slice is invalid or the covariance is not
  /// symmetric positive definite.
  void validate() const;
};

/// Unnormalized log-posterior of theta = (alpha, nu, rho).
///
/// -infinity outside {alpha > 0, nu > 0, |rho| <= 1} or when some residual
/// |y_i - f_i(theta)| exceeds BA_i / 2; otherwise -r' Sigma^{-1} r / 2.
double log_posterior(const Eigen::Vector3d& theta, const PosteriorSpec& spec);
double log_posterior(const SabrParams& theta, const PosteriorSpec& spec);

/// Precomputes the Cholesky factor of Sigma; use when evaluating many times.
class PosteriorEvaluator {
 public:
  explicit PosteriorEvaluator(PosteriorSpec spec);
  double operator()(const Eigen::Vector3d& theta) const;
  const PosteriorSpec& spec() const noexcept { return spec_; }

 private:
  PosteriorSpec spec_;
  Matrix5d precision_;
};

inline Eigen::Vector3d to_vector(const SabrParams& p) { return {p.alpha, p.nu, p.rho}; }
inline SabrParams to_params(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

// MAP ----------------------------------------------------------------------

/// alpha = ATM mid vol, nu = 1, rho = 0.1 * sign(25C mid - 25P mid).
SabrParams default_map_start(const MarketSlice& slice);

struct MapOptions {
  NelderMeadOptions simplex;
  /// Draws of the random search used when the start is infeasible.
  int random_search_draws = 20000;
  std::uint64_t seed = 7;
};

struct MapResult {
  SabrParams theta;
  double log_posterior = 0.0;
  SabrParams start;      // feasible point the simplex started from
  int iterations = 0;
  bool converged = false;
  bool start_repaired = false;  // the requested start was infeasible
};

/// Maximizes log_posterior with Nelder-Mead. An infeasible start is repaired
/// first by minimizing the soft-constraint objective and then by a seeded
/// random search in the prior box; CalibrationInfeasible if both fail.
MapResult nelder_mead_map(const PosteriorSpec& spec, const SabrParams& start,
                          const MapOptions& opts = {});

// Sampling -----------------------------------------------------------------

struct ChainConfig {
  std::size_t n_samples = 100000;
  double burn_in_fraction = 0.25;
  std::uint64_t seed = 20190410;
  /// Proposal standard deviations before adaptation (alpha, nu, rho).
  Eigen::Vector3d initial_proposal_scale{0.01, 0.05, 0.05};
  std::size_t adaptation_start = 1000;
  double adaptation_epsilon = 1e-10;

  void validate() const;
};

struct ChainResult {
  Eigen::Matrix<double, Eigen::Dynamic, 3> samples;  // one row per iteration
  std::vector<double> log_posterior_trace;
  double acceptance_rate = 0.0;
  SabrParams map_start;
};

using LogDensity3 = std::function<double(const Eigen::Vector3d&)>;

/// Adaptive Metropolis (Haario, Saksman and Tamminen, 2001). Up to
/// adaptation_start the proposal is N(0, diag(scale^2)); afterwards it is
/// N(0, s_d Cov(history) + s_d eps I) with s_d = 2.4^2 / 3. Every iteration
/// stores the current state, so rejections appear as repeats.
ChainResult adaptive_metropolis(const LogDensity3& log_density, const Eigen::Vector3d& start,
                                const ChainConfig& cfg);
ChainResult adaptive_metropolis(const PosteriorSpec& spec, const SabrParams& start,
                                const ChainConfig& cfg);

// Summaries ----------------------------------------------------------------

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

struct PosteriorSummary {
  SabrParams map;
  SabrParams cm_theta;
  double cm_defect = 0.0;
  double map_defect = 0.0;
  double level = 0.9;
  std::pair<double, double> defect_credible_interval{0.0, 0.0};
  std::size_t n_retained = 0;
  double acceptance_rate = 0.0;
  /// Set when cm_defect falls outside the credible interval.
  bool interval_warning = false;
  DensityCurve alpha_density;
  DensityCurve nu_density;
  DensityCurve rho_density;
  DensityCurve defect_density;
};

/// Drops the first floor(burn_in_fraction * n) samples and summarizes the
/// rest. Throws InsufficientSamples when fewer than 100 remain.
PosteriorSummary summarize(const ChainResult& chain, const ChainConfig& cfg, double level = 0.9,
                           std::size_t grid_points = 200);

/// Epanechnikov kernel density estimate evaluated at every grid point.
std::vector<double> kde_epanechnikov(const std::vector<double>& samples,
                                     const std::vector<double>& grid, double bandwidth);

/// h = 2.345 * sd * n^{-1/5}; a tiny positive width when the sample is constant.
double epanechnikov_bandwidth(const std::vector<double>& samples);

/// Evenly spaced grid over [min - h, max + h].
std::vector<double> density_grid(const std::vector<double>& samples, double bandwidth,
                                 std::size_t points);

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace sabr
