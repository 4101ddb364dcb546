#include "sabr/sabr_model.hpp"

#include <algorithm>
#include <cmath>

#include "sabr/errors.hpp"
#include "sabr/normal.hpp"

namespace sabr {
namespace {

// Keeps X(z) and the 1/(1 - rho^2) factors finite at the prior boundary.
constexpr double kRhoClamp = 1.0 - 1e-12;

double undiscounted_price(double forward, double strike, double expiry, double p, double sigma) {
  const double sd = sigma * std::sqrt(expiry);
  if (!(sd > 0.0)) return std::max(p * (forward - strike), 0.0);
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  return std::max(p * (forward * norm_cdf(p * d1) - strike * norm_cdf(p * d2)), 0.0);
}

}  // namespace

bool SabrParams::valid() const noexcept {
  return std::isfinite(alpha) && std::isfinite(nu) && std::isfinite(rho) && alpha > 0.0 &&
         nu > 0.0 && rho >= -1.0 && rho <= 1.0;
}

void SabrParams::validate() const {
  if (!valid()) throw InvalidInput("SABR parameters need alpha > 0, nu > 0 and |rho| <= 1");
}

void VanillaSpec::validate() const {
  if (!(std::isfinite(strike) && strike > 0.0)) throw InvalidInput("vanilla: strike must be > 0");
  if (!(std::isfinite(expiry) && expiry > 0.0)) throw InvalidInput("vanilla: expiry must be > 0");
  if (!std::isfinite(discount_rate)) throw InvalidInput("vanilla: discount rate must be finite");
}

double bsm_price(double forward, const VanillaSpec& spec, double sigma) {
  spec.validate();
  if (!(std::isfinite(forward) && forward > 0.0)) throw InvalidInput("bsm_price: forward must be > 0");
  if (!(std::isfinite(sigma) && sigma >= 0.0)) throw InvalidInput("bsm_price: sigma must be >= 0");
  const double df = std::exp(-spec.discount_rate * spec.expiry);
  return df * undiscounted_price(forward, spec.strike, spec.expiry, phi(spec.type), sigma);
}

double bsm_implied_vol(double price, double forward, const VanillaSpec& spec) {
  spec.validate();
  if (!(std::isfinite(forward) && forward > 0.0)) {
    throw InvalidInput("bsm_implied_vol: forward must be > 0");
  }
  if (!std::isfinite(price)) throw NoSolution("bsm_implied_vol: price is not finite");

  const double df = std::exp(-spec.discount_rate * spec.expiry);
  const double target = price / df;
  const double k = spec.strike;
  const double p = phi(spec.type);
  const double intrinsic = std::max(p * (forward - k), 0.0);
  const double upper = spec.type == OptionType::call ? forward : k;
  if (!(target > intrinsic && target < upper)) {
    throw NoSolution("bsm_implied_vol: price outside the no-arbitrage band");
  }

  // Solve on the out-of-the-money side, where all of the price is time value.
  double otm_price = target;
  double otm_phi = p;
  if (intrinsic > 0.0) {
    otm_price = target - intrinsic;
    otm_phi = -p;
  }
  const double t = spec.expiry;
  auto f = [&](double s) { return undiscounted_price(forward, k, t, otm_phi, s) - otm_price; };

  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw NoSolution("bsm_implied_vol: no volatility reproduces the price");
  }

  // Bisection until the bracket is tight enough for Newton to take over.
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }

  double s = 0.5 * (lo + hi);
  const double sqrt_t = std::sqrt(t);
  for (int iter = 0; iter < 100; ++iter) {
    const double diff = f(s);
    if (std::fabs(diff) <= 1e-15 * otm_price) break;
    (diff < 0.0 ? lo : hi) = s;
    const double d1 = (std::log(forward / k) + 0.5 * s * s * t) / (s * sqrt_t);
    const double vega = forward * norm_pdf(d1) * sqrt_t;
    double next = s - diff / vega;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::fabs(next - s) <= 1e-16 * s) {
      s = next;
      break;
    }
    s = next;
  }
  return s;
}

ExpansionTerms sabr_expansion_terms(double forward, double strike, const SabrParams& theta) {
  const double alpha = theta.alpha;
  const double nu = theta.nu;
  const double rho = std::clamp(theta.rho, -kRhoClamp, kRhoClamp);

  const double z = nu * std::log(strike / forward) / alpha;
  const double d = std::sqrt(1.0 + 2.0 * rho * z + z * z);
  const double d_minus_1 = (2.0 * rho * z + z * z) / (d + 1.0);

  double g = 1.0 + 0.5 * rho * z;  // z / X(z) near the money
  if (std::fabs(z) >= 1e-8) {
    const double x = (z + rho >= 0.0) ? std::log1p((d_minus_1 + z) / (1.0 + rho))
                                      : -std::log1p((d_minus_1 - z) / (1.0 - rho));
    g = z / x;
  }

  // b = (ln(sqrt D) - ln g) / z^2, with its Taylor series near the money.
  double b = 0.0;
  if (std::fabs(z) < 1e-3) {
    const double r2 = rho * rho;
    b = 1.0 / 12.0 - r2 / 8.0 + z * (rho * r2 / 4.0 - 5.0 * rho / 24.0) +
        z * z * (-29.0 * r2 * r2 / 64.0 + 23.0 * r2 / 48.0 - 23.0 / 360.0);
  } else {
    b = (0.5 * std::log(d) - std::log(g)) / (z * z);
  }

  const double g3 = g * g * g;
  ExpansionTerms out;
  out.sigma0 = alpha * g;
  out.sigma1 = alpha * nu * nu * g3 * b + alpha * alpha * nu * rho * g3 / (2.0 * (d + 1.0 + rho * z));
  return out;
}

double sabr_implied_vol(double forward, double strike, double expiry, const SabrParams& theta,
                        const SecondOrderCoefficient& sigma2) {
  if (!(std::isfinite(forward) && forward > 0.0) || !(std::isfinite(strike) && strike > 0.0) ||
      !(std::isfinite(expiry) && expiry > 0.0)) {
    throw InvalidInput("sabr_implied_vol: forward, strike and expiry must be > 0");
  }
  theta.validate();

  const ExpansionTerms terms = sabr_expansion_terms(forward, strike, theta);
  double vol = terms.sigma0 + terms.sigma1 * expiry;
  if (sigma2) vol += sigma2(forward, strike, expiry, theta) * expiry * expiry;
  if (std::isfinite(vol) && vol > 0.0) return vol;
  if (std::isfinite(terms.sigma0) && terms.sigma0 > 0.0) return terms.sigma0;
  return theta.alpha;
}

std::array<double, 5> model_smile(const MarketSlice& slice, const SabrParams& theta,
                                  const SecondOrderCoefficient& sigma2) {
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < 5; ++i) {
    out[i] = sabr_implied_vol(slice.forward, slice.strikes[i], slice.expiry, theta, sigma2);
  }
  return out;
}

double defect_indicator(const SabrParams& theta) noexcept {
  if (!(theta.rho > 0.0)) return 0.0;
  return -std::expm1(-2.0 * theta.rho * theta.alpha / theta.nu);
}

}  // namespace sabr
