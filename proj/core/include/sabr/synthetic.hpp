#pragma once

// Synthetic smile quotes generated from known SABR parameters. Used by tests,
// the demo data set and the `synth` CLI command; never a stand-in for market
// truth.

#include <array>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "sabr/market_data.hpp"
#include "sabr/sabr_model.hpp"

namespace sabr {

/// Made-up bid-ask widths: 1.0 vol point at the 10-delta wings, 0.5 at
/// 25-delta and 0.3 at the money.
inline constexpr std::array<double, 5> kSyntheticSpreads = {0.010, 0.005, 0.003, 0.005, 0.010};

/// Model vols at the five pillars, each solving sigma = sabr(K(sigma)) where
/// K(sigma) is the convention strike for that pillar's delta.
std::array<double, 5> model_pillar_vols(double forward, double expiry, const SabrParams& theta,
                                        const QuoteConvention& conv, double foreign_rate = 0.0);

struct SyntheticQuoteSpec {
  std::chrono::year_month_day date{};
  std::string tenor = "3M";
  double expiry = 0.0;  // 0 means ACT/365 from the tenor
  double spot = 0.88;
  RateCurvePoint rates{0.0075, -0.004};
  SabrParams theta{0.08, 0.9, 0.45};
  std::array<double, 5> spreads = kSyntheticSpreads;
  /// Standard deviation of the mid-vol noise (decimal vol). Draws are
  /// truncated to lie strictly inside half the spread.
  double noise_sd = 0.001;
};

/// One quote row in the per-delta layout: mid = model vol + truncated noise,
/// bid/ask = mid -/+ spread / 2.
SmileQuoteRow synthesize_quote(const SyntheticQuoteSpec& spec, const QuoteConvention& conv,
                               std::uint64_t seed);

}  // namespace sabr
