#include <algorithm>
#include <cmath>
#include <numeric>

#include "sabr/bayes_engine.hpp"
#include "sabr/errors.hpp"

namespace sabr {
namespace {

// Mean computed around the first value, so a constant sample returns that
// value exactly.
double shifted_mean(const std::vector<double>& v) {
  const double pivot = v.front();
  double acc = 0.0;
  for (double x : v) acc += x - pivot;
  return pivot + acc / static_cast<double>(v.size());
}

DensityCurve density_of(const std::vector<double>& samples, std::size_t points) {
  DensityCurve c;
  c.bandwidth = epanechnikov_bandwidth(samples);
  c.grid = density_grid(samples, c.bandwidth, points);
  c.density = kde_epanechnikov(samples, c.grid, c.bandwidth);
  return c;
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidInput("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("quantile: probability must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = h - static_cast<double>(lo);
  if (w == 0.0) return sorted[lo];
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

double epanechnikov_bandwidth(const std::vector<double>& samples) {
  if (samples.empty()) throw InvalidInput("bandwidth: empty sample");
  const double n = static_cast<double>(samples.size());
  const double m = shifted_mean(samples);
  double ss = 0.0;
  for (double x : samples) ss += (x - m) * (x - m);
  const double sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double h = 2.345 * sd * std::pow(n, -0.2);
  if (h > 0.0 && std::isfinite(h)) return h;
  return 1e-8 * std::max(1.0, std::fabs(m));
}

std::vector<double> density_grid(const std::vector<double>& samples, double bandwidth,
                                 std::size_t points) {
  if (samples.empty()) throw InvalidInput("density grid: empty sample");
  if (points < 2) throw InvalidInput("density grid: need at least two points");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  const double a = *mn - bandwidth;
  const double b = *mx + bandwidth;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

std::vector<double> kde_epanechnikov(const std::vector<double>& samples,
                                     const std::vector<double>& grid, double bandwidth) {
  if (samples.empty()) throw InvalidInput("kde: empty sample");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidInput("kde: bandwidth must be > 0");

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * bandwidth);

  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x - bandwidth);
    double acc = 0.0;
    for (; it != sorted.end() && *it <= x + bandwidth; ++it) {
      const double u = (x - *it) / bandwidth;
      if (std::fabs(u) <= 1.0) acc += 0.75 * (1.0 - u * u);
    }
    out[g] = acc * norm;
  }
  return out;
}

PosteriorSummary summarize(const ChainResult& chain, const ChainConfig& cfg, double level,
                           std::size_t grid_points) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("summarize: level must lie in (0, 1)");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0)) {
    throw InvalidInput("summarize: burn_in_fraction must lie in [0, 1)");
  }
  const auto n = static_cast<std::size_t>(chain.samples.rows());
  const auto drop = static_cast<std::size_t>(std::floor(cfg.burn_in_fraction * static_cast<double>(n)));
  const std::size_t kept = n - drop;
  if (kept < 100) throw InsufficientSamples("summarize: fewer than 100 samples after burn-in");

  std::vector<double> alpha(kept), nu(kept), rho(kept), defect(kept);
  for (std::size_t i = 0; i < kept; ++i) {
    const auto row = static_cast<Eigen::Index>(drop + i);
    alpha[i] = chain.samples(row, 0);
    nu[i] = chain.samples(row, 1);
    rho[i] = chain.samples(row, 2);
    defect[i] = defect_indicator({alpha[i], nu[i], rho[i]});
  }

  PosteriorSummary s;
  s.map = chain.map_start;
  s.map_defect = defect_indicator(chain.map_start);
  s.cm_theta = {shifted_mean(alpha), shifted_mean(nu), shifted_mean(rho)};
  s.cm_defect = shifted_mean(defect);
  s.level = level;
  s.n_retained = kept;
  s.acceptance_rate = chain.acceptance_rate;

  std::vector<double> sorted = defect;
  std::sort(sorted.begin(), sorted.end());
  s.defect_credible_interval = {quantile_sorted(sorted, 0.5 * (1.0 - level)),
                                quantile_sorted(sorted, 0.5 * (1.0 + level))};
  s.interval_warning =
      s.cm_defect < s.defect_credible_interval.first || s.cm_defect > s.defect_credible_interval.second;

  s.alpha_density = density_of(alpha, grid_points);
  s.nu_density = density_of(nu, grid_points);
  s.rho_density = density_of(rho, grid_points);
  s.defect_density = density_of(defect, grid_points);
  return s;
}

}  // namespace sabr
