#pragma once

// Lognormal (beta = 1) SABR:
//   dF = alpha_t F dW1,  d alpha_t = nu alpha_t dW2,  d<W1,W2> = rho dt.

#include <array>
#include <functional>

#include "sabr/market_data.hpp"

namespace sabr {

struct SabrParams {
  double alpha = 0.0;  // initial stochastic volatility
  double nu = 0.0;     // vol of vol
  double rho = 0.0;    // spot/vol correlation

  bool valid() const noexcept;
  /// Throws InvalidInput unless alpha > 0, nu > 0 and |rho| <= 1.
  void validate() const;
};

struct VanillaSpec {
  double strike = 0.0;
  double expiry = 0.0;
  OptionType type = OptionType::call;
  double discount_rate = 0.0;  // domestic rate

  void validate() const;
};

/// Black-Scholes-Merton price on the forward, discounted at spec.discount_rate.
/// sigma = 0 returns the discounted intrinsic value.
double bsm_price(double forward, const VanillaSpec& spec, double sigma);

/// Inverts bsm_price. Throws NoSolution when the price is not strictly inside
/// the no-arbitrage band.
double bsm_implied_vol(double price, double forward, const VanillaSpec& spec);

/// Optional T^2 coefficient of the implied-vol expansion. Returns sigma_2 for
/// the given point; an empty function means sigma_2 = 0.
using SecondOrderCoefficient =
    std::function<double(double forward, double strike, double expiry, const SabrParams&)>;

struct ExpansionTerms {
  double sigma0 = 0.0;  // zeroth order (exact beta = 1 leading term)
  double sigma1 = 0.0;  // coefficient of T
};

/// Time-expansion coefficients of the lognormal SABR implied volatility.
///
/// sigma0 = alpha z / X(z) with z = nu ln(K/F) / alpha and
/// X(z) = ln((sqrt(1 + 2 rho z + z^2) + z + rho) / (1 + rho)).
/// sigma1 is the first-order heat-kernel term of the hyperbolic geometry;
/// at K = F it reduces to alpha (rho nu alpha / 4 + (2 - 3 rho^2) nu^2 / 24).
ExpansionTerms sabr_expansion_terms(double forward, double strike, const SabrParams& theta);

/// sigma0 + sigma1 T + sigma2 T^2. Falls back to sigma0 when the corrected
/// value is not finite and positive.
double sabr_implied_vol(double forward, double strike, double expiry, const SabrParams& theta,
                        const SecondOrderCoefficient& sigma2 = {});

/// Forward map f(theta): SABR vols at the five slice strikes.
std::array<double, 5> model_smile(const MarketSlice& slice, const SabrParams& theta,
                                  const SecondOrderCoefficient& sigma2 = {});

/// Large-maturity martingale defect 1 - exp(-2 rho alpha / nu) for rho > 0,
/// exactly 0 for rho <= 0.
double defect_indicator(const SabrParams& theta) noexcept;

}  // namespace sabr
