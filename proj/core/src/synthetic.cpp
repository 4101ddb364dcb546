#include "sabr/synthetic.hpp"

#include <cmath>
#include <random>

#include "sabr/errors.hpp"

namespace sabr {
namespace {

constexpr std::array<double, 5> kDeltas = {0.10, 0.25, 0.5, 0.25, 0.10};
constexpr std::array<OptionType, 5> kTypes = {OptionType::put, OptionType::put, OptionType::call,
                                              OptionType::call, OptionType::call};

double pillar_strike(std::size_t i, double forward, double sigma, double expiry,
                     const QuoteConvention& conv, double foreign_rate) {
  if (i == 2) return atm_strike(forward, sigma, expiry, conv);
  return delta_to_strike(forward, sigma, expiry, kDeltas[i], kTypes[i], conv, foreign_rate);
}

}  // namespace

std::array<double, 5> model_pillar_vols(double forward, double expiry, const SabrParams& theta,
                                        const QuoteConvention& conv, double foreign_rate) {
  theta.validate();
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < 5; ++i) {
    // The map sigma -> sabr(K(sigma)) is a contraction for realistic smiles;
    // damping keeps it stable for steep wings.
    double sigma = theta.alpha;
    double change = 1.0;
    for (int iter = 0; iter < 500 && change > 1e-14 * sigma; ++iter) {
      const double k = pillar_strike(i, forward, sigma, expiry, conv, foreign_rate);
      const double next = sabr_implied_vol(forward, k, expiry, theta);
      change = std::fabs(next - sigma);
      sigma = iter < 50 ? next : 0.5 * (sigma + next);
    }
    if (!(change <= 1e-10 * sigma)) throw NoSolution("synthetic quote: pillar volatility did not converge");
    out[i] = sigma;
  }
  return out;
}

SmileQuoteRow synthesize_quote(const SyntheticQuoteSpec& spec, const QuoteConvention& conv,
                               std::uint64_t seed) {
  SmileQuoteRow row;
  row.observation_date = spec.date;
  row.tenor = spec.tenor;
  row.expiry = spec.expiry > 0.0 ? spec.expiry : act365(spec.date, add_tenor(spec.date, spec.tenor));
  row.spot = spec.spot;
  row.rates = spec.rates;

  const double forward = compute_forward(spec.spot, spec.rates, row.expiry);
  const auto vols = model_pillar_vols(forward, row.expiry, spec.theta, conv, spec.rates.foreign_rate);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DeltaVolPayload payload;
  for (std::size_t i = 0; i < 5; ++i) {
    const double half = 0.5 * spec.spreads[i];
    double eps = 0.0;
    if (spec.noise_sd > 0.0) {
      do {
        eps = spec.noise_sd * normal(rng);
      } while (std::fabs(eps) >= half);
    }
    const double mid = vols[i] + eps;
    payload.vols[i] = {mid - half, mid + half};
  }
  row.payload = payload;
  row.validate();
  return row;
}

}  // namespace sabr
