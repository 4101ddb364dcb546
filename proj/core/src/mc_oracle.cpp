#include "sabr/mc_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <thread>

#include <boost/random/normal_distribution.hpp>

#include "sabr/errors.hpp"

namespace sabr {
namespace {

constexpr std::size_t kBatchPaths = 16384;  // even, so antithetic pairs never straddle batches

// Explosion paths below the level where the remaining explosion probability
// is kFloorProbability are stopped; the resulting bias is at most that value.
constexpr double kFloorProbability = 1e-4;
// Largest drift nu rho v h allowed in one log step of the explosion SDE.
constexpr double kMaxLogDrift = 0.05;

std::mt19937_64 batch_rng(std::uint64_t seed, std::size_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(batch), 0x5ab3u};
  return std::mt19937_64(seq);
}

template <class Fn>
void for_each_batch(std::size_t n_batches, unsigned threads, Fn&& fn) {
  unsigned workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_batches)));
  if (workers == 1) {
    for (std::size_t b = 0; b < n_batches; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&] {
      for (std::size_t b = next++; b < n_batches; b = next++) fn(b);
    }));
  }
  for (auto& j : jobs) j.get();
}

// Mean and sum of squared deviations, merged in a fixed order (Chan et al.).
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  double std_error() const { return n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0; }
};

std::size_t batches_for(std::size_t n_paths) { return (n_paths + kBatchPaths - 1) / kBatchPaths; }

std::size_t batch_size(std::size_t n_paths, std::size_t b) {
  return std::min(kBatchPaths, n_paths - b * kBatchPaths);
}

void check_inputs(double expiry, const SabrParams& theta, const PathConfig& cfg) {
  cfg.validate();
  theta.validate();
  if (!(std::isfinite(expiry) && expiry > 0.0)) throw InvalidInput("monte carlo: T must be > 0");
}

}  // namespace

void PathConfig::validate() const {
  if (n_paths < 1000) throw InvalidInput("path config: n_paths must be >= 1000");
  if (n_steps < 50) throw InvalidInput("path config: n_steps must be >= 50 per year");
  if (!(std::isfinite(vol_cap) && vol_cap > 0.0)) throw InvalidInput("path config: vol_cap must be > 0");
  if (antithetic && n_paths % 2 != 0) {
    throw InvalidInput("path config: antithetic sampling needs an even n_paths");
  }
}

std::size_t effective_steps(double expiry, const SabrParams& theta, const PathConfig& cfg) {
  const double by_grid = std::ceil(static_cast<double>(cfg.n_steps) * expiry);
  const double by_nu = std::ceil(100.0 * theta.nu * theta.nu * expiry);
  return static_cast<std::size_t>(std::max({by_grid, by_nu, 20.0}));
}

TerminalSamples simulate_sabr_terminal(double f0, double expiry, const SabrParams& theta,
                                       const PathConfig& cfg) {
  check_inputs(expiry, theta, cfg);
  if (!(std::isfinite(f0) && f0 > 0.0)) throw InvalidInput("monte carlo: F0 must be > 0");

  const std::size_t steps = effective_steps(expiry, theta, cfg);
  const double dt = expiry / static_cast<double>(steps);
  const double sq = std::sqrt(dt);
  const double rho = theta.rho;
  const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const double vol_drift = -0.5 * theta.nu * theta.nu * dt;
  const double log_f0 = std::log(f0);
  const int mirrors = cfg.antithetic ? 2 : 1;

  TerminalSamples out;
  out.forward.assign(cfg.n_paths, 0.0);
  out.exploded.assign(cfg.n_paths, 0);
  out.n_steps = steps;
  out.antithetic = cfg.antithetic;

  for_each_batch(batches_for(cfg.n_paths), cfg.threads, [&](std::size_t b) {
    auto rng = batch_rng(cfg.seed, b);
    boost::random::normal_distribution<double> normal;
    const std::size_t first = b * kBatchPaths;
    const std::size_t count = batch_size(cfg.n_paths, b);
    for (std::size_t p = 0; p < count; p += static_cast<std::size_t>(mirrors)) {
      double a[2] = {theta.alpha, theta.alpha};
      double lf[2] = {log_f0, log_f0};
      bool dead[2] = {false, false};
      for (std::size_t s = 0; s < steps; ++s) {
        const double z2 = normal(rng);
        const double z1 = rho * z2 + rho_bar * normal(rng);
        for (int m = 0; m < mirrors; ++m) {
          if (dead[m]) continue;
          const double sign = m == 0 ? 1.0 : -1.0;
          lf[m] += a[m] * sq * sign * z1 - 0.5 * a[m] * a[m] * dt;
          a[m] *= std::exp(theta.nu * sq * sign * z2 + vol_drift);
          if (a[m] > cfg.vol_cap) dead[m] = true;
        }
      }
      for (int m = 0; m < mirrors; ++m) {
        const std::size_t idx = first + p + static_cast<std::size_t>(m);
        out.exploded[idx] = dead[m] ? 1 : 0;
        out.forward[idx] = dead[m] ? 0.0 : std::exp(lf[m]);
      }
    }
  });
  out.n_exploded = static_cast<std::size_t>(std::count(out.exploded.begin(), out.exploded.end(), 1));
  return out;
}

DefectEstimate mc_defect(double f0, double expiry, const SabrParams& theta, const PathConfig& cfg) {
  check_inputs(expiry, theta, cfg);
  if (!(std::isfinite(f0) && f0 > 0.0)) throw InvalidInput("monte carlo: F0 must be > 0");

  // The trapezoid rule on an exact alpha path needs fewer steps than the
  // Euler forward, so a coarser nu-dependent floor is used here.
  const std::size_t steps = static_cast<std::size_t>(
      std::max({std::ceil(static_cast<double>(cfg.n_steps) * expiry),
                std::ceil(25.0 * theta.nu * theta.nu * expiry), 20.0}));
  const double dt = expiry / static_cast<double>(steps);
  const double sq = std::sqrt(dt);
  const double nu = theta.nu;
  const double rho = theta.rho;
  const double vol_drift = -0.5 * nu * nu * dt;
  const int mirrors = cfg.antithetic ? 2 : 1;

  const std::size_t n_batches = batches_for(cfg.n_paths);
  std::vector<Moments> partial(n_batches);
  for_each_batch(n_batches, cfg.threads, [&](std::size_t b) {
    auto rng = batch_rng(cfg.seed, b);
    boost::random::normal_distribution<double> normal;
    const std::size_t count = batch_size(cfg.n_paths, b);
    Moments acc;
    for (std::size_t p = 0; p < count; p += static_cast<std::size_t>(mirrors)) {
      double a[2] = {theta.alpha, theta.alpha};
      double integral[2] = {0.0, 0.0};
      bool dead[2] = {false, false};
      for (std::size_t s = 0; s < steps; ++s) {
        const double z = normal(rng);
        for (int m = 0; m < mirrors; ++m) {
          if (dead[m]) continue;
          const double next = a[m] * std::exp(nu * sq * (m == 0 ? z : -z) + vol_drift);
          integral[m] += 0.5 * (a[m] * a[m] + next * next) * dt;
          a[m] = next;
          if (a[m] > cfg.vol_cap) dead[m] = true;
        }
      }
      double unit = 0.0;
      for (int m = 0; m < mirrors; ++m) {
        if (dead[m]) continue;
        unit += std::exp(rho * (a[m] - theta.alpha) / nu - 0.5 * rho * rho * integral[m]);
      }
      acc.add(unit / mirrors);
    }
    partial[b] = acc;
  });

  Moments total;
  for (const auto& m : partial) total.merge(m);
  DefectEstimate est;
  est.point_estimate = 1.0 - total.mean;
  est.std_error = total.std_error();
  est.n_paths = cfg.n_paths;
  est.horizon = expiry;
  return est;
}

DefectEstimate mc_explosion_probability(const SabrParams& theta, double expiry,
                                        const PathConfig& cfg) {
  check_inputs(expiry, theta, cfg);

  const double nu = theta.nu;
  const double rho = theta.rho;
  const double base_dt = std::min(1.0 / static_cast<double>(cfg.n_steps), 0.01 / (nu * nu));
  const double log_cap = std::log(cfg.vol_cap);
  // From level v the probability of ever exploding is 1 - exp(-2 rho v / nu).
  const double floor_level = rho > 0.0 ? kFloorProbability * nu / (2.0 * rho) : 0.0;
  const double base_sq = std::sqrt(base_dt);

  const std::size_t n_batches = batches_for(cfg.n_paths);
  std::vector<std::size_t> hits(n_batches, 0);
  for_each_batch(n_batches, cfg.threads, [&](std::size_t b) {
    auto rng = batch_rng(cfg.seed, b);
    boost::random::normal_distribution<double> normal;
    const std::size_t count = batch_size(cfg.n_paths, b);
    std::size_t exploded = 0;
    for (std::size_t p = 0; p < count; ++p) {
      double lv = std::log(theta.alpha);
      double v = theta.alpha;
      double t = 0.0;
      while (t < expiry) {
        double h = std::min(base_dt, expiry - t);
        if (rho > 0.0) h = std::min(h, kMaxLogDrift / (nu * rho * v));
        const double sq = h == base_dt ? base_sq : std::sqrt(h);
        lv += nu * sq * normal(rng) + (nu * rho * v - 0.5 * nu * nu) * h;
        t += h;
        if (lv >= log_cap) {
          ++exploded;
          break;
        }
        v = std::exp(lv);
        if (v < floor_level) break;
      }
    }
    hits[b] = exploded;
  });

  std::size_t total = 0;
  for (std::size_t h : hits) total += h;
  const double n = static_cast<double>(cfg.n_paths);
  const double p = static_cast<double>(total) / n;
  DefectEstimate est;
  est.point_estimate = p;
  est.std_error = std::sqrt(p * (1.0 - p) / n);
  est.n_paths = cfg.n_paths;
  est.horizon = expiry;
  return est;
}

McImpliedVol mc_implied_vol(const TerminalSamples& paths, double f0, const VanillaSpec& spec) {
  spec.validate();
  if (paths.forward.empty()) throw InvalidInput("mc_implied_vol: no paths");
  const double p = phi(spec.type);
  const double df = std::exp(-spec.discount_rate * spec.expiry);
  const std::size_t stride = paths.antithetic ? 2 : 1;

  Moments acc;
  for (std::size_t i = 0; i < paths.forward.size(); i += stride) {
    double unit = 0.0;
    for (std::size_t m = 0; m < stride; ++m) {
      unit += std::max(p * (paths.forward[i + m] - spec.strike), 0.0);
    }
    acc.add(unit / static_cast<double>(stride));
  }

  McImpliedVol out;
  out.price = df * acc.mean;
  out.price_std_error = df * acc.std_error();
  out.n_paths = paths.forward.size();
  out.vol = bsm_implied_vol(out.price, f0, spec);
  try {
    out.lo = bsm_implied_vol(out.price - out.price_std_error, f0, spec);
  } catch (const NoSolution&) {
    out.lo = 0.0;
  }
  try {
    out.hi = bsm_implied_vol(out.price + out.price_std_error, f0, spec);
  } catch (const NoSolution&) {
    out.hi = std::numeric_limits<double>::infinity();
  }
  return out;
}

McImpliedVol mc_implied_vol(double f0, const VanillaSpec& spec, const SabrParams& theta,
                            const PathConfig& cfg) {
  spec.validate();
  if (!(std::isfinite(f0) && f0 > 0.0)) throw InvalidInput("mc_implied_vol: F0 must be > 0");
  if (std::fabs(std::log(spec.strike / f0)) > 1.0) {
    throw InvalidInput("mc_implied_vol: strike outside |ln(K/F)| <= 1");
  }
  try {
    return mc_implied_vol(simulate_sabr_terminal(f0, spec.expiry, theta, cfg), f0, spec);
  } catch (const NoSolution&) {
    PathConfig wider = cfg;
    wider.n_paths *= 4;
    wider.seed = cfg.seed + 1;
    return mc_implied_vol(simulate_sabr_terminal(f0, spec.expiry, theta, wider), f0, spec);
  }
}

}  // namespace sabr
