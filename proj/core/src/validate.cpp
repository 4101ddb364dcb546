#include <algorithm>
#include <cmath>
#include <string>

#include "csv_util.hpp"
#include "sabr/pipeline.hpp"

namespace sabr {
namespace {

std::string theta_label(const SabrParams& t) {
  return "alpha=" + detail::fmt9(t.alpha) + " nu=" + detail::fmt9(t.nu) + " rho=" + detail::fmt9(t.rho);
}

ValidationCheck make_check(std::string name, double value, double reference, double tolerance) {
  ValidationCheck c;
  c.name = std::move(name);
  c.value = value;
  c.reference = reference;
  c.tolerance = tolerance;
  c.passed = std::fabs(value - reference) <= tolerance;
  return c;
}

}  // namespace

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ValidationReport run_validate(const ValidateConfig& cfg) {
  ValidationReport report;
  PathConfig paths;
  paths.n_paths = cfg.n_paths;
  paths.seed = cfg.seed;
  paths.threads = cfg.threads;

  // No defect without positive correlation.
  for (const SabrParams& t : {SabrParams{0.1, 0.4, 0.0}, SabrParams{0.1, 0.4, -0.3},
                              SabrParams{0.15, 1.0, -0.7}}) {
    const auto d = mc_defect(1.0, 5.0, t, paths);
    report.checks.push_back(
        make_check("martingale T=5 " + theta_label(t), d.point_estimate, 0.0, 3.0 * d.std_error));
  }

  // Explosion probability against the large-maturity indicator.
  for (const SabrParams& t : {SabrParams{0.15, 0.8, 0.5}, SabrParams{0.1, 1.0, 0.3}}) {
    const auto p = mc_explosion_probability(t, 50.0, paths);
    report.checks.push_back(make_check("indicator limit T=50 " + theta_label(t), p.point_estimate,
                                       defect_indicator(t), std::max(0.02, 3.0 * p.std_error)));
  }

  // The defect equals the explosion probability at every horizon.
  struct Case {
    SabrParams theta;
    double expiry;
  };
  for (const Case& c : {Case{{0.1, 0.4, 0.5}, 1.0}, Case{{0.1, 0.4, 0.5}, 5.0},
                        Case{{0.15, 1.0, 0.5}, 5.0}}) {
    const auto d = mc_defect(1.0, c.expiry, c.theta, paths);
    const auto p = mc_explosion_probability(c.theta, c.expiry, paths);
    const double se = std::hypot(d.std_error, p.std_error);
    report.checks.push_back(make_check("defect identity T=" + detail::fmt9(c.expiry) + " " +
                                           theta_label(c.theta),
                                       d.point_estimate, p.point_estimate, 3.0 * se));
  }

  // Expansion against Monte Carlo prices (0.3 vol points).
  {
    const SabrParams t{0.1, 0.4, 0.5};
    PathConfig wide = paths;
    wide.n_paths = std::max<std::size_t>(5 * cfg.n_paths, 100000);
    const auto sims = simulate_sabr_terminal(1.0, 0.25, t, wide);
    for (double k : {0.95, 1.0, 1.05}) {
      VanillaSpec spec{k, 0.25, k < 1.0 ? OptionType::put : OptionType::call, 0.0};
      const auto mc = mc_implied_vol(sims, 1.0, spec);
      report.checks.push_back(make_check("expansion vs MC T=0.25 K=" + detail::fmt9(k) + " " +
                                             theta_label(t),
                                         sabr_implied_vol(1.0, k, 0.25, t), mc.vol, 0.003));
    }
  }

  // Sensitivity to the explosion threshold.
  {
    const SabrParams t{0.15, 1.0, 0.5};
    const auto base = mc_explosion_probability(t, 5.0, paths);
    for (double cap : {1e4, 1e8}) {
      PathConfig c = paths;
      c.vol_cap = cap;
      const auto p = mc_explosion_probability(t, 5.0, c);
      report.checks.push_back(make_check("vol_cap " + detail::fmt9(cap) + " vs 1e6 T=5 " +
                                             theta_label(t),
                                         p.point_estimate, base.point_estimate,
                                         3.0 * std::hypot(p.std_error, base.std_error)));
    }
  }
  return report;
}

}  // namespace sabr
