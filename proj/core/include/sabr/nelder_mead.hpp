#pragma once

// Derivative-free simplex minimizer (Nelder and Mead, 1965).

#include <functional>

#include <Eigen/Core>

namespace sabr {

struct NelderMeadOptions {
  /// Edge lengths of the initial simplex; empty means 5% of |x_i| (or 1e-3).
  Eigen::VectorXd initial_steps;
  /// Stop once every vertex is within this distance (max-norm) of the best one.
  double x_tolerance = 1e-10;
  /// A restart that improves the best value by less than this ends the search.
  double f_tolerance = 1e-14;
  int max_iterations = 20000;
  int max_restarts = 20;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int restarts = 0;
  /// False when max_iterations was hit before the simplex collapsed.
  bool converged = false;
};

/// Minimizes f from `start`. f may return +infinity to mark infeasible
/// points; the start itself must have a finite value.
NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& start,
                                      const NelderMeadOptions& opts = {});

}  // namespace sabr
