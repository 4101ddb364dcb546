#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "sabr/bayes_engine.hpp"
#include "sabr/errors.hpp"

namespace sabr {

void ChainConfig::validate() const {
  if (n_samples < 1000) throw InvalidInput("chain: n_samples must be >= 1000");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw InvalidInput("chain: burn_in_fraction must lie in [0, 1)");
  }
  if (!(adaptation_epsilon > 0.0)) throw InvalidInput("chain: adaptation_epsilon must be > 0");
  if (!(initial_proposal_scale.array() > 0.0).all() || !initial_proposal_scale.allFinite()) {
    throw InvalidInput("chain: initial proposal scales must be positive");
  }
}

ChainResult adaptive_metropolis(const LogDensity3& log_density, const Eigen::Vector3d& start,
                                const ChainConfig& cfg) {
  cfg.validate();
  double lp = log_density(start);
  if (!std::isfinite(lp)) throw InvalidInput("adaptive_metropolis: start has zero density");

  constexpr double kScale = 2.4 * 2.4 / 3.0;
  const Eigen::Matrix3d initial_factor = cfg.initial_proposal_scale.asDiagonal();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  ChainResult out;
  out.samples.resize(static_cast<Eigen::Index>(cfg.n_samples), 3);
  out.log_posterior_trace.resize(cfg.n_samples);
  out.map_start = to_params(start);

  Eigen::Vector3d x = start;
  // Running mean and scatter matrix of every state visited so far.
  Eigen::Vector3d mean = start;
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  double count = 1.0;
  std::size_t accepted = 0;

  Eigen::Matrix3d factor = initial_factor;
  for (std::size_t t = 0; t < cfg.n_samples; ++t) {
    if (t >= cfg.adaptation_start && count > 1.0) {
      const Eigen::Matrix3d cov = scatter / (count - 1.0);
      const Eigen::Matrix3d proposal =
          kScale * cov + kScale * cfg.adaptation_epsilon * Eigen::Matrix3d::Identity();
      Eigen::LLT<Eigen::Matrix3d> llt(proposal);
      factor = llt.info() == Eigen::Success ? Eigen::Matrix3d(llt.matrixL()) : initial_factor;
    }

    const Eigen::Vector3d z(normal(rng), normal(rng), normal(rng));
    const Eigen::Vector3d y = x + factor * z;
    const double lpy = log_density(y);
    const double u = uniform(rng);
    if (std::isfinite(lpy) && std::log(u) < lpy - lp) {
      x = y;
      lp = lpy;
      ++accepted;
    }

    out.samples.row(static_cast<Eigen::Index>(t)) = x.transpose();
    out.log_posterior_trace[t] = lp;

    count += 1.0;
    const Eigen::Vector3d delta = x - mean;
    mean += delta / count;
    scatter += delta * (x - mean).transpose();
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_samples);
  return out;
}

ChainResult adaptive_metropolis(const PosteriorSpec& spec, const SabrParams& start,
                                const ChainConfig& cfg) {
  const PosteriorEvaluator posterior(spec);
  return adaptive_metropolis([&](const Eigen::Vector3d& t) { return posterior(t); },
                             to_vector(start), cfg);
}

}  // namespace sabr
