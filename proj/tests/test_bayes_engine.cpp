#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "sabr/bayes_engine.hpp"
#include "sabr/errors.hpp"
#include "sabr/synthetic.hpp"
#include "test_helpers.hpp"

using namespace sabr;
using sabr::testing::Draw;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

MarketSlice slice_from(const SabrParams& th) {
  MarketSlice s;
  s.forward = 0.88;
  s.expiry = 0.5;
  s.strikes = {0.80, 0.84, 0.88, 0.92, 0.97};
  s.spreads = {0.01, 0.005, 0.003, 0.005, 0.01};
  s.mid_vols = model_smile(s, th);
  return s;
}

PosteriorSpec spec_from(const SabrParams& th) {
  PosteriorSpec spec;
  spec.slice = slice_from(th);
  return spec;
}

ChainResult chain_of(const std::vector<Eigen::Vector3d>& rows) {
  ChainResult c;
  c.samples.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) c.samples.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  c.log_posterior_trace.assign(rows.size(), 0.0);
  c.acceptance_rate = 0.5;
  c.map_start = to_params(rows.front());
  return c;
}

}  // namespace

TEST(LogPosterior, OutsidePriorSupport) {
  const auto spec = spec_from({0.07, 0.8, 0.3});
  EXPECT_EQ(log_posterior(SabrParams{0.07, 0.8, 1.5}, spec), kNegInf);
  EXPECT_EQ(log_posterior(SabrParams{0.07, 0.0, 0.3}, spec), kNegInf);
  EXPECT_EQ(log_posterior(SabrParams{0.07, -0.5, 0.3}, spec), kNegInf);
  EXPECT_EQ(log_posterior(SabrParams{-0.07, 0.8, 0.3}, spec), kNegInf);
  EXPECT_EQ(log_posterior(SabrParams{0.0, 0.8, 0.3}, spec), kNegInf);
}

TEST(LogPosterior, ZeroResidualIsZero) {
  const SabrParams th{0.07, 0.8, 0.3};
  auto spec = spec_from(th);
  spec.noise_covariance = Matrix5d::Identity();
  EXPECT_EQ(log_posterior(th, spec), 0.0);
}

TEST(LogPosterior, BidAskBracket) {
  const SabrParams th{0.07, 0.8, 0.3};
  auto spec = spec_from(th);
  const double base = spec.slice.mid_vols[1];
  spec.slice.mid_vols[1] = base + 0.6 * spec.slice.spreads[1];
  EXPECT_EQ(log_posterior(th, spec), kNegInf);

  spec.slice.mid_vols[1] = base + 0.4 * spec.slice.spreads[1];
  const double r = 0.4 * spec.slice.spreads[1];
  EXPECT_NEAR(log_posterior(th, spec), -0.5 * r * r / kPercentPointVariance, 1e-12);

  spec.slice.mid_vols[1] = base + 0.6 * spec.slice.spreads[1];
  spec.soft_constraint = true;
  EXPECT_TRUE(std::isfinite(log_posterior(th, spec)));
}

TEST(LogPosterior, GeneralCovariance) {
  const SabrParams th{0.07, 0.8, 0.3};
  auto spec = spec_from(th);
  Eigen::Matrix<double, 5, 1> r;
  r << 0.001, -0.002, 0.0005, 0.001, 0.003;
  for (int i = 0; i < 5; ++i) spec.slice.mid_vols[i] += r[i];
  Matrix5d sigma = Matrix5d::Identity() * 2e-4;
  sigma(0, 1) = sigma(1, 0) = 5e-5;
  spec.noise_covariance = sigma;
  EXPECT_NEAR(log_posterior(th, spec), -0.5 * r.dot(sigma.llt().solve(r)), 1e-9);
}

TEST(LogPosterior, CovarianceMustBeSymmetricPositiveDefinite) {
  auto spec = spec_from({0.07, 0.8, 0.3});
  spec.noise_covariance(0, 1) = 1e-5;
  EXPECT_THROW(spec.validate(), InvalidInput);
  spec.noise_covariance = -Matrix5d::Identity();
  EXPECT_THROW(spec.validate(), InvalidInput);
}

TEST(LogPosterior, FeasibleSetProperty) {
  const auto spec = spec_from({0.07, 0.8, 0.3});
  const PosteriorEvaluator eval(spec);
  Draw draw(11);
  for (int i = 0; i < 20000; ++i) {
    const Eigen::Vector3d t(draw.uniform(-0.05, 0.2), draw.uniform(-0.5, 3.0), draw.uniform(-1.3, 1.3));
    const double lp = eval(t);
    bool feasible = t[0] > 0.0 && t[1] > 0.0 && std::fabs(t[2]) <= 1.0;
    if (feasible) {
      const auto m = model_smile(spec.slice, to_params(t));
      for (int k = 0; k < 5; ++k) {
        feasible = feasible && std::fabs(spec.slice.mid_vols[k] - m[k]) <= 0.5 * spec.slice.spreads[k];
      }
    }
    ASSERT_EQ(std::isfinite(lp), feasible);
  }
}

TEST(NelderMead, QuadraticBowl) {
  const Eigen::Vector3d target(0.3, -1.2, 2.5);
  auto f = [&](const Eigen::VectorXd& x) { return (x - target).squaredNorm(); };
  for (const Eigen::Vector3d start : {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(5, 5, -5)}) {
    const auto res = nelder_mead_minimize(f, start);
    EXPECT_TRUE(res.converged);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(res.x[i], target[i], 1e-6);
  }
}

TEST(NelderMead, Rosenbrock3d) {
  auto f = [](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (int i = 0; i < 2; ++i) s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
    return s;
  };
  const auto res = nelder_mead_minimize(f, Eigen::Vector3d(-1.2, 1.0, 0.5));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(res.x[i], 1.0, 1e-4);
}

TEST(NelderMead, RespectsInfeasibleRegion) {
  // Minimum of the unconstrained bowl lies outside x0 > 0.
  auto f = [](const Eigen::VectorXd& x) {
    return x[0] <= 0.0 ? std::numeric_limits<double>::infinity() : std::pow(x[0] + 1.0, 2) + x[1] * x[1];
  };
  const auto res = nelder_mead_minimize(f, Eigen::Vector2d(2.0, 1.0));
  EXPECT_GT(res.x[0], 0.0);
  EXPECT_LT(res.x[0], 1e-6);
  EXPECT_NEAR(res.x[1], 0.0, 1e-6);
}

TEST(NelderMead, InfiniteStartIsRejected) {
  auto f = [](const Eigen::VectorXd&) { return std::numeric_limits<double>::infinity(); };
  EXPECT_THROW(nelder_mead_minimize(f, Eigen::Vector2d(0, 0)), InvalidInput);
}

TEST(NelderMeadMap, RecoversParametersFromNoiselessQuotes) {
  const SabrParams truth{0.1, 0.4, 0.5};
  SyntheticQuoteSpec q;
  q.date = parse_date("2019-04-10");
  q.tenor = "6M";
  q.theta = truth;
  q.noise_sd = 0.0;
  const QuoteConvention conv;
  PosteriorSpec spec;
  spec.slice = quotes_to_slice(synthesize_quote(q, conv, 1), conv);
  const auto start = default_map_start(spec.slice);
  const auto res = nelder_mead_map(spec, start);
  EXPECT_NEAR(res.theta.alpha, truth.alpha, 1e-4);
  EXPECT_NEAR(res.theta.nu, truth.nu, 1e-4);
  EXPECT_NEAR(res.theta.rho, truth.rho, 1e-4);
  EXPECT_GE(res.log_posterior, log_posterior(res.start, spec));
}

TEST(NelderMeadMap, ImprovesOnFeasibleStart) {
  const SabrParams truth{0.07, 0.8, 0.3};
  const auto spec = spec_from(truth);
  const SabrParams start{0.0702, 0.79, 0.31};
  ASSERT_TRUE(std::isfinite(log_posterior(start, spec)));
  const auto res = nelder_mead_map(spec, start);
  EXPECT_FALSE(res.start_repaired);
  EXPECT_GE(res.log_posterior, log_posterior(start, spec));
  EXPECT_NEAR(res.log_posterior, 0.0, 1e-9);
}

TEST(NelderMeadMap, InfeasibleQuotesAreReported) {
  auto spec = spec_from({0.07, 0.8, 0.3});
  spec.slice.mid_vols = {0.05, 0.20, 0.05, 0.20, 0.05};
  spec.slice.spreads = {1e-5, 1e-5, 1e-5, 1e-5, 1e-5};
  MapOptions opts;
  opts.random_search_draws = 2000;
  EXPECT_THROW(nelder_mead_map(spec, default_map_start(spec.slice), opts), CalibrationInfeasible);
}

TEST(NelderMeadMap, DefaultStart) {
  auto s = slice_from({0.07, 0.8, 0.3});
  const auto start = default_map_start(s);
  EXPECT_EQ(start.alpha, s.mid_vols[2]);
  EXPECT_EQ(start.nu, 1.0);
  EXPECT_EQ(start.rho, 0.1);
  std::swap(s.mid_vols[1], s.mid_vols[3]);
  EXPECT_EQ(default_map_start(s).rho, -0.1);
}

TEST(AdaptiveMetropolis, StandardGaussianMoments) {
  ChainConfig cfg;
  cfg.seed = 3;
  const auto chain =
      adaptive_metropolis([](const Eigen::Vector3d& x) { return -0.5 * x.squaredNorm(); },
                          Eigen::Vector3d(0.5, -0.5, 0.2), cfg);
  const Eigen::Vector3d mean = chain.samples.colwise().mean();
  const Eigen::MatrixXd centered = chain.samples.rowwise() - mean.transpose();
  const Eigen::Matrix3d cov = centered.transpose() * centered / (chain.samples.rows() - 1.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(mean[i], 0.0, 0.05);
    EXPECT_NEAR(cov(i, i), 1.0, 0.1);
  }
  EXPECT_GT(chain.acceptance_rate, 0.05);
  EXPECT_LT(chain.acceptance_rate, 0.7);
}

TEST(AdaptiveMetropolis, UniformBox) {
  const Eigen::Vector3d lo(0.0, -1.0, 2.0);
  const Eigen::Vector3d hi(1.0, 3.0, 2.5);
  auto box = [&](const Eigen::Vector3d& x) {
    return ((x.array() >= lo.array()) && (x.array() <= hi.array())).all() ? 0.0 : kNegInf;
  };
  ChainConfig cfg;
  cfg.seed = 4;
  const auto chain = adaptive_metropolis(box, 0.5 * (lo + hi), cfg);
  const Eigen::Vector3d mean = chain.samples.colwise().mean();
  for (int i = 0; i < 3; ++i) {
    const double width = hi[i] - lo[i];
    const double var = (chain.samples.col(i).array() - mean[i]).square().sum() / (chain.samples.rows() - 1.0);
    EXPECT_NEAR(mean[i], 0.5 * (lo[i] + hi[i]), 0.05);
    EXPECT_NEAR(var, width * width / 12.0, 0.1 * width * width / 12.0);
  }
}

TEST(AdaptiveMetropolis, StationaryDistributionOfBimodalTarget) {
  // First coordinate: equal mixture of N(-2, 0.5^2) and N(1, 1); the others
  // are independent standard normals. Compared on bins of width 0.25.
  auto mix = [](double x) {
    return 0.5 * std::exp(-0.5 * std::pow((x + 2.0) / 0.5, 2)) / 0.5 + 0.5 * std::exp(-0.5 * std::pow(x - 1.0, 2));
  };
  auto log_target = [&](const Eigen::Vector3d& x) {
    return std::log(mix(x[0])) - 0.5 * (x[1] * x[1] + x[2] * x[2]);
  };
  ChainConfig cfg;
  cfg.n_samples = 1000000;
  cfg.seed = 5;
  const auto chain = adaptive_metropolis(log_target, Eigen::Vector3d::Zero(), cfg);

  const double a = -5.0, b = 5.0, w = 0.25;
  const int bins = static_cast<int>((b - a) / w);
  std::vector<double> hist(bins + 2, 0.0);
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    const double x = chain.samples(i, 0);
    const int k = x < a ? 0 : (x >= b ? bins + 1 : 1 + static_cast<int>((x - a) / w));
    hist[k] += 1.0;
  }
  // Reference bin masses by fine midpoint quadrature.
  std::vector<double> ref(bins + 2, 0.0);
  double total = 0.0;
  for (double x = -12.0; x < 12.0; x += 1e-4) {
    const double xm = x + 5e-5;
    const int k = xm < a ? 0 : (xm >= b ? bins + 1 : 1 + static_cast<int>((xm - a) / w));
    ref[k] += mix(xm) * 1e-4;
    total += mix(xm) * 1e-4;
  }
  double tv = 0.0;
  for (int k = 0; k < bins + 2; ++k) tv += std::fabs(hist[k] / chain.samples.rows() - ref[k] / total);
  EXPECT_LT(0.5 * tv, 0.02);
}

TEST(AdaptiveMetropolis, Deterministic) {
  const auto spec = spec_from({0.07, 0.8, 0.3});
  ChainConfig cfg;
  cfg.n_samples = 5000;
  cfg.seed = 99;
  const auto a = adaptive_metropolis(spec, {0.07, 0.8, 0.3}, cfg);
  const auto b = adaptive_metropolis(spec, {0.07, 0.8, 0.3}, cfg);
  EXPECT_TRUE((a.samples.array() == b.samples.array()).all());
  EXPECT_EQ(a.log_posterior_trace, b.log_posterior_trace);
  cfg.seed = 100;
  const auto c = adaptive_metropolis(spec, {0.07, 0.8, 0.3}, cfg);
  EXPECT_FALSE((a.samples.array() == c.samples.array()).all());
}

TEST(AdaptiveMetropolis, StoredStatesAreFeasibleAndRejectionsRepeat) {
  const auto spec = spec_from({0.07, 0.8, 0.3});
  const PosteriorEvaluator eval(spec);
  ChainConfig cfg;
  cfg.n_samples = 20000;
  const auto chain = adaptive_metropolis(spec, {0.07, 0.8, 0.3}, cfg);
  std::size_t moves = 0;
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    const Eigen::Vector3d x = chain.samples.row(i).transpose();
    ASSERT_TRUE(std::isfinite(eval(x)));
    ASSERT_EQ(eval(x), chain.log_posterior_trace[static_cast<std::size_t>(i)]);
    if (i > 0 && (chain.samples.row(i) != chain.samples.row(i - 1))) ++moves;
  }
  EXPECT_GT(chain.acceptance_rate, 0.0);
  EXPECT_LT(chain.acceptance_rate, 1.0);
  EXPECT_LE(static_cast<double>(moves), chain.acceptance_rate * cfg.n_samples);
}

TEST(AdaptiveMetropolis, InfeasibleStartIsRejected) {
  const auto spec = spec_from({0.07, 0.8, 0.3});
  EXPECT_THROW(adaptive_metropolis(spec, {0.07, 0.8, 1.2}, ChainConfig{}), InvalidInput);
}

TEST(ChainConfig, Validation) {
  ChainConfig cfg;
  cfg.n_samples = 999;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = ChainConfig{};
  cfg.burn_in_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = ChainConfig{};
  cfg.adaptation_epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(Summarize, DegenerateChain) {
  const Eigen::Vector3d th(0.1, 0.4, 0.5);
  const auto chain = chain_of(std::vector<Eigen::Vector3d>(2000, th));
  const auto s = summarize(chain, ChainConfig{});
  EXPECT_EQ(s.cm_theta.alpha, 0.1);
  EXPECT_EQ(s.cm_theta.nu, 0.4);
  EXPECT_EQ(s.cm_theta.rho, 0.5);
  EXPECT_EQ(s.cm_defect, defect_indicator(to_params(th)));
  EXPECT_EQ(s.defect_credible_interval.first, s.defect_credible_interval.second);
  EXPECT_FALSE(s.interval_warning);
  EXPECT_EQ(s.n_retained, 1500u);
}

TEST(Summarize, QuantilesOfKnownDistribution) {
  // With rho = 0.5 and nu = 1 the indicator is 1 - exp(-alpha); for
  // alpha ~ Exp(1) it is uniform on (0, 1).
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> expo(1.0);
  std::vector<Eigen::Vector3d> rows;
  for (int i = 0; i < 200000; ++i) rows.emplace_back(expo(rng), 1.0, 0.5);
  const auto s = summarize(chain_of(rows), ChainConfig{}, 0.9);
  EXPECT_NEAR(s.defect_credible_interval.first, 0.05, 0.005);
  EXPECT_NEAR(s.defect_credible_interval.second, 0.95, 0.005);
  EXPECT_NEAR(s.cm_defect, 0.5, 0.005);
  EXPECT_NEAR(s.cm_theta.alpha, 1.0, 0.02);
}

TEST(Summarize, MeanOfIndicatorIsNotIndicatorOfMean) {
  std::vector<Eigen::Vector3d> rows;
  for (int i = 0; i < 1000; ++i) {
    rows.emplace_back(0.05, 0.4, 0.5);
    rows.emplace_back(0.3, 0.4, 0.5);
  }
  ChainConfig cfg;
  cfg.burn_in_fraction = 0.0;
  const auto s = summarize(chain_of(rows), cfg);
  const double expected = 0.5 * (defect_indicator({0.05, 0.4, 0.5}) + defect_indicator({0.3, 0.4, 0.5}));
  EXPECT_NEAR(s.cm_defect, expected, 1e-14);
  EXPECT_GT(std::fabs(s.cm_defect - defect_indicator(s.cm_theta)), 0.01);
}

TEST(Summarize, InvariantUnderPermutationAfterBurnIn) {
  Draw draw(9);
  std::vector<Eigen::Vector3d> rows;
  for (int i = 0; i < 4000; ++i) rows.emplace_back(draw.uniform(0.05, 0.1), draw.uniform(0.5, 1.0), draw.uniform(-0.2, 0.8));
  ChainConfig cfg;
  const auto a = summarize(chain_of(rows), cfg);
  std::shuffle(rows.begin() + 1000, rows.end(), draw.engine());
  const auto b = summarize(chain_of(rows), cfg);
  EXPECT_NEAR(a.cm_defect, b.cm_defect, 1e-14);
  EXPECT_NEAR(a.cm_theta.alpha, b.cm_theta.alpha, 1e-14);
  EXPECT_NEAR(a.cm_theta.rho, b.cm_theta.rho, 1e-14);
  EXPECT_EQ(a.defect_credible_interval, b.defect_credible_interval);
  EXPECT_GE(a.cm_defect, 0.0);
  EXPECT_LT(a.cm_defect, 1.0);
}

TEST(Summarize, TooFewSamplesAfterBurnIn) {
  const auto chain = chain_of(std::vector<Eigen::Vector3d>(130, Eigen::Vector3d(0.1, 0.4, 0.5)));
  EXPECT_THROW(summarize(chain, ChainConfig{}), InsufficientSamples);
}

TEST(Kde, KernelPeak) {
  EXPECT_DOUBLE_EQ(kde_epanechnikov({0.0}, {0.0}, 1.0)[0], 0.75);
}

TEST(Kde, CompactSupport) {
  const auto d = kde_epanechnikov({0.0, 1.0}, {-1.0001, 2.0001, 5.0}, 1.0);
  for (double v : d) EXPECT_EQ(v, 0.0);
}

TEST(Kde, UniformDensity) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100000);
  for (double& x : s) x = u(rng);
  const double h = epanechnikov_bandwidth(s);
  const auto d = kde_epanechnikov(s, {0.2, 0.35, 0.5, 0.65, 0.8}, h);
  for (double v : d) EXPECT_NEAR(v, 1.0, 0.05);
}

TEST(Kde, IntegratesToOne) {
  std::mt19937_64 rng(12);
  std::gamma_distribution<double> g(2.0, 1.0);
  std::vector<double> s(20000);
  for (double& x : s) x = g(rng);
  const double h = epanechnikov_bandwidth(s);
  const auto grid = density_grid(s, h, 2000);
  const auto d = kde_epanechnikov(s, grid, h);
  double integral = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) integral += 0.5 * (d[i] + d[i - 1]) * (grid[i] - grid[i - 1]);
  EXPECT_NEAR(integral, 1.0, 0.01);
}

TEST(Kde, BandwidthMustBePositive) {
  EXPECT_THROW(kde_epanechnikov({0.0}, {0.0}, 0.0), InvalidInput);
  EXPECT_THROW(kde_epanechnikov({0.0}, {0.0}, -1.0), InvalidInput);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
}
