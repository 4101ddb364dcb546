#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>

#include "sabr/bayes_engine.hpp"
#include "sabr/errors.hpp"

namespace sabr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool in_prior_support(const Eigen::Vector3d& t) {
  return std::isfinite(t[0]) && std::isfinite(t[1]) && std::isfinite(t[2]) && t[0] > 0.0 &&
         t[1] > 0.0 && std::fabs(t[2]) <= 1.0;
}

Matrix5d precision_of(const Matrix5d& sigma) {
  Eigen::LLT<Matrix5d> llt(sigma);
  return llt.solve(Matrix5d::Identity());
}

double evaluate(const Eigen::Vector3d& theta, const PosteriorSpec& spec, const Matrix5d& precision,
                bool soft) {
  if (!in_prior_support(theta)) return kNegInf;
  const std::array<double, 5> model = model_smile(spec.slice, to_params(theta), spec.sigma2);
  Eigen::Matrix<double, 5, 1> r;
  double penalty = 0.0;
  for (int i = 0; i < 5; ++i) {
    r[i] = spec.slice.mid_vols[i] - model[i];
    const double excess = std::fabs(r[i]) - 0.5 * spec.slice.spreads[i];
    if (excess > 0.0) {
      if (!soft) return kNegInf;
      penalty += (excess / 0.01) * (excess / 0.01);
    }
  }
  const double value = -0.5 * r.dot(precision * r) - spec.soft_penalty_weight * penalty;
  return std::isfinite(value) ? value : kNegInf;
}

}  // namespace

void PosteriorSpec::validate() const {
  slice.validate();
  if (!noise_covariance.allFinite()) throw InvalidInput("posterior: noise covariance is not finite");
  if (!noise_covariance.isApprox(noise_covariance.transpose(), 1e-12)) {
    throw InvalidInput("posterior: noise covariance is not symmetric");
  }
  Eigen::LLT<Matrix5d> llt(noise_covariance);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("posterior: noise covariance is not positive definite");
  }
  if (!(soft_penalty_weight > 0.0)) throw InvalidInput("posterior: soft penalty weight must be > 0");
}

double log_posterior(const Eigen::Vector3d& theta, const PosteriorSpec& spec) {
  return evaluate(theta, spec, precision_of(spec.noise_covariance), spec.soft_constraint);
}

double log_posterior(const SabrParams& theta, const PosteriorSpec& spec) {
  return log_posterior(to_vector(theta), spec);
}

PosteriorEvaluator::PosteriorEvaluator(PosteriorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  precision_ = precision_of(spec_.noise_covariance);
}

double PosteriorEvaluator::operator()(const Eigen::Vector3d& theta) const {
  return evaluate(theta, spec_, precision_, spec_.soft_constraint);
}

SabrParams default_map_start(const MarketSlice& slice) {
  const double skew = slice.mid_vols[3] - slice.mid_vols[1];
  const double rho = skew > 0.0 ? 0.1 : (skew < 0.0 ? -0.1 : 0.0);
  return {slice.mid_vols[2], 1.0, rho};
}

MapResult nelder_mead_map(const PosteriorSpec& spec, const SabrParams& start,
                          const MapOptions& opts) {
  const PosteriorEvaluator hard(spec);
  PosteriorSpec soft_spec = spec;
  soft_spec.soft_constraint = true;
  const PosteriorEvaluator soft(soft_spec);

  MapResult out;
  Eigen::Vector3d x0 = to_vector(start);
  double f0 = hard(x0);

  NelderMeadOptions nm = opts.simplex;
  if (nm.initial_steps.size() == 0) {
    nm.initial_steps = Eigen::Vector3d(std::max(0.1 * std::fabs(x0[0]), 1e-3), 0.1, 0.1);
  }

  if (!std::isfinite(f0)) {
    out.start_repaired = true;
    // First try to walk into the support along the penalized objective.
    if (in_prior_support(x0)) {
      const auto repaired = nelder_mead_minimize(
          [&](const Eigen::VectorXd& x) { return -soft(Eigen::Vector3d(x)); }, x0, nm);
      const Eigen::Vector3d candidate = repaired.x;
      if (std::isfinite(hard(candidate))) {
        x0 = candidate;
        f0 = hard(candidate);
      }
    }
    if (!std::isfinite(f0)) {
      std::mt19937_64 rng(opts.seed);
      const double atm = spec.slice.mid_vols[2];
      std::uniform_real_distribution<double> ua(0.25 * atm, 4.0 * atm);
      std::uniform_real_distribution<double> un(1e-3, 5.0);
      std::uniform_real_distribution<double> ur(-1.0, 1.0);
      for (int i = 0; i < opts.random_search_draws; ++i) {
        const Eigen::Vector3d cand(ua(rng), un(rng), ur(rng));
        const double fc = hard(cand);
        if (fc > f0) {
          f0 = fc;
          x0 = cand;
        }
      }
    }
    if (!std::isfinite(f0)) {
      throw CalibrationInfeasible(
          "no SABR parameters reproduce the quotes inside the bid-ask spreads");
    }
  }

  out.start = to_params(x0);
  const auto res =
      nelder_mead_minimize([&](const Eigen::VectorXd& x) { return -hard(Eigen::Vector3d(x)); }, x0, nm);
  out.theta = to_params(Eigen::Vector3d(res.x));
  out.log_posterior = -res.value;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

}  // namespace sabr
