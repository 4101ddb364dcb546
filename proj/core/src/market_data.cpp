#include "sabr/market_data.hpp"

#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "sabr/errors.hpp"
#include "sabr/normal.hpp"

namespace sabr {
namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

double foreign_discount(const QuoteConvention& conv, double foreign_rate, double expiry) {
  return conv.delta_style == DeltaStyle::spot ? std::exp(-foreign_rate * expiry) : 1.0;
}

// Stops toms748 once the bracket is below 1e-12 relative width.
struct RelativeTolerance {
  bool operator()(double a, double b) const {
    return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::min(std::fabs(a), std::fabs(b)));
  }
};

void check_delta_inputs(double forward, double sigma, double expiry, double delta) {
  if (!finite_positive(forward)) throw InvalidInput("delta_to_strike: forward must be > 0");
  if (!finite_positive(sigma)) throw InvalidInput("delta_to_strike: sigma must be > 0");
  if (!finite_positive(expiry)) throw InvalidInput("delta_to_strike: expiry must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta_to_strike: delta must lie in (0,1)");
}

// Premium-adjusted strike by root finding in log-strike.
double premium_adjusted_strike(double forward, double sigma, double expiry, double target,
                               OptionType type) {
  const double sd = sigma * std::sqrt(expiry);
  const double log_lo = std::log(forward) - 6.0 * sd;
  const double log_hi = std::log(forward) + 6.0 * sd;
  const double p = phi(type);

  // |delta| / df as a function of log-strike.
  auto magnitude = [&](double log_k) {
    const double k = std::exp(log_k);
    const double d2 = (std::log(forward / k) - 0.5 * sd * sd) / sd;
    return (k / forward) * norm_cdf(p * d2);
  };

  double search_lo = log_lo;
  if (type == OptionType::call) {
    // The call magnitude peaks where sd * N(d2) = n(d2); take the right branch.
    auto slope = [&](double d) { return sd * norm_cdf(d) - norm_pdf(d); };
    double d_lo = -sd;
    double d_hi = 40.0;
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(slope, d_lo, d_hi, RelativeTolerance{}, iters);
    const double d_star = 0.5 * (a + b);
    const double log_peak = std::log(forward) - d_star * sd - 0.5 * sd * sd;
    if (target > magnitude(log_peak)) {
      throw ConversionFailure("premium-adjusted call delta exceeds the attainable maximum",
                              std::exp(log_lo), std::exp(log_hi));
    }
    search_lo = std::max(log_lo, log_peak);
  }

  auto f = [&](double log_k) { return magnitude(log_k) - target; };
  const double f_lo = f(search_lo);
  const double f_hi = f(log_hi);
  if (f_lo == 0.0) return std::exp(search_lo);
  if (f_hi == 0.0) return std::exp(log_hi);
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw ConversionFailure("no premium-adjusted strike inside the search bracket",
                            std::exp(search_lo), std::exp(log_hi));
  }
  std::uintmax_t iters = 300;
  auto [a, b] = boost::math::tools::toms748_solve(f, search_lo, log_hi, f_lo, f_hi,
                                                   RelativeTolerance{}, iters);
  const double fa = f(a);
  const double fb = f(b);
  return std::exp(std::fabs(fa) <= std::fabs(fb) ? a : b);
}

}  // namespace

std::string to_string(const QuoteConvention& conv) {
  std::string out = conv.delta_style == DeltaStyle::spot ? "spot" : "forward";
  if (conv.premium_adjusted) out += "+pa";
  if (conv.atm_style == AtmStyle::at_the_forward) out += "+atf";
  return out;
}

QuoteConvention parse_convention(const std::string& text) {
  QuoteConvention conv;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, '+')) {
    if (token == "forward") {
      conv.delta_style = DeltaStyle::forward;
    } else if (token == "spot") {
      conv.delta_style = DeltaStyle::spot;
    } else if (token == "pa") {
      conv.premium_adjusted = true;
    } else if (token == "atf") {
      conv.atm_style = AtmStyle::at_the_forward;
    } else if (token == "dns") {
      conv.atm_style = AtmStyle::delta_neutral_straddle;
    } else if (!token.empty()) {
      throw ConfigError("unknown convention token '" + token + "'");
    }
  }
  return conv;
}

void SmileQuoteRow::validate() const {
  if (!observation_date.ok()) throw MalformedQuote("invalid observation date");
  if (!finite_positive(expiry)) throw MalformedQuote("expiry year fraction must be > 0");
  if (!finite_positive(spot)) throw MalformedQuote("spot must be > 0");
  if (!std::isfinite(rates.domestic_rate) || !std::isfinite(rates.foreign_rate)) {
    throw MalformedQuote("rates must be finite");
  }
  auto check = [](const BidAsk& q, bool positive, const char* what) {
    if (!std::isfinite(q.bid) || !std::isfinite(q.ask)) {
      throw MalformedQuote(std::string(what) + ": non-finite quote");
    }
    if (q.bid > q.ask) throw MalformedQuote(std::string(what) + ": bid above ask");
    if (positive && !(q.bid > 0.0)) throw MalformedQuote(std::string(what) + ": vol must be > 0");
  };
  if (const auto* p = std::get_if<DeltaVolPayload>(&payload)) {
    for (std::size_t i = 0; i < 5; ++i) check(p->vols[i], true, kPillarNames[i]);
  } else {
    const auto& b = std::get<BrokerPayload>(payload);
    check(b.atm, true, "ATM");
    check(b.rr25, false, "RR25");
    check(b.rr10, false, "RR10");
    check(b.str25, false, "STR25");
    check(b.str10, false, "STR10");
  }
}

void MarketSlice::validate() const {
  if (!finite_positive(forward)) throw InvalidInput("slice: forward must be > 0");
  if (!finite_positive(expiry)) throw InvalidInput("slice: expiry must be > 0");
  for (std::size_t i = 0; i < 5; ++i) {
    if (!finite_positive(strikes[i])) throw InvalidInput("slice: strikes must be > 0");
    if (i > 0 && !(strikes[i] > strikes[i - 1])) {
      throw InvalidInput("slice: strikes must be strictly increasing");
    }
    if (!finite_positive(mid_vols[i])) throw InvalidInput("slice: mid vols must be > 0");
    if (!(std::isfinite(spreads[i]) && spreads[i] >= 0.0)) {
      throw InvalidInput("slice: spreads must be >= 0");
    }
  }
}

double compute_forward(double spot, const RateCurvePoint& rates, double tau) {
  if (!finite_positive(spot)) throw InvalidInput("compute_forward: spot must be > 0");
  if (!(std::isfinite(tau) && tau >= 0.0)) throw InvalidInput("compute_forward: tau must be >= 0");
  if (rates.domestic_rate == rates.foreign_rate) return spot;
  return spot * std::exp((rates.domestic_rate - rates.foreign_rate) * tau);
}

double bsm_delta(double forward, double strike, double sigma, double expiry, OptionType type,
                 const QuoteConvention& conv, double foreign_rate) {
  if (!finite_positive(forward) || !finite_positive(strike) || !finite_positive(sigma) ||
      !finite_positive(expiry)) {
    throw InvalidInput("bsm_delta: forward, strike, sigma and expiry must be > 0");
  }
  const double p = phi(type);
  const double sd = sigma * std::sqrt(expiry);
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double df = foreign_discount(conv, foreign_rate, expiry);
  if (conv.premium_adjusted) return p * df * (strike / forward) * norm_cdf(p * (d1 - sd));
  return p * df * norm_cdf(p * d1);
}

double delta_to_strike(double forward, double sigma, double expiry, double delta, OptionType type,
                       const QuoteConvention& conv, double foreign_rate) {
  check_delta_inputs(forward, sigma, expiry, delta);
  const double df = foreign_discount(conv, foreign_rate, expiry);
  const double target = delta / df;
  if (!conv.premium_adjusted) {
    if (!(target < 1.0)) {
      throw ConversionFailure("spot delta exceeds the foreign discount factor", 0.0,
                              std::numeric_limits<double>::infinity());
    }
    const double p = phi(type);
    const double sd = sigma * std::sqrt(expiry);
    const double d1 = p * norm_inv(target);
    return forward * std::exp(-d1 * sd + 0.5 * sd * sd);
  }
  return premium_adjusted_strike(forward, sigma, expiry, target, type);
}

double atm_strike(double forward, double sigma, double expiry, const QuoteConvention& conv) {
  if (!finite_positive(forward)) throw InvalidInput("atm_strike: forward must be > 0");
  if (!(std::isfinite(sigma) && sigma >= 0.0)) throw InvalidInput("atm_strike: sigma must be >= 0");
  if (!finite_positive(expiry)) throw InvalidInput("atm_strike: expiry must be > 0");
  if (conv.atm_style == AtmStyle::at_the_forward || sigma == 0.0) return forward;
  const double half_var = 0.5 * sigma * sigma * expiry;
  return forward * std::exp(conv.premium_adjusted ? -half_var : half_var);
}

PillarVols pillar_vols(const QuotePayload& payload) {
  PillarVols out;
  if (const auto* p = std::get_if<DeltaVolPayload>(&payload)) {
    for (std::size_t i = 0; i < 5; ++i) {
      out.mid[i] = p->vols[i].mid();
      out.spread[i] = p->vols[i].spread();
    }
    return out;
  }
  const auto& b = std::get<BrokerPayload>(payload);
  auto wing = [&](const BidAsk& str, const BidAsk& rr, double sign) {
    // Interval arithmetic: the RR enters with sign +-1/2.
    const double bid = b.atm.bid + str.bid + (sign > 0 ? 0.5 * rr.bid : -0.5 * rr.ask);
    const double ask = b.atm.ask + str.ask + (sign > 0 ? 0.5 * rr.ask : -0.5 * rr.bid);
    return BidAsk{bid, ask};
  };
  const std::array<BidAsk, 5> quotes = {wing(b.str10, b.rr10, -1.0), wing(b.str25, b.rr25, -1.0),
                                        b.atm, wing(b.str25, b.rr25, 1.0),
                                        wing(b.str10, b.rr10, 1.0)};
  for (std::size_t i = 0; i < 5; ++i) {
    out.mid[i] = quotes[i].mid();
    out.spread[i] = quotes[i].spread();
  }
  return out;
}

MarketSlice quotes_to_slice(const SmileQuoteRow& row, const QuoteConvention& conv) {
  row.validate();
  const PillarVols pv = pillar_vols(row.payload);
  for (std::size_t i = 0; i < 5; ++i) {
    if (!finite_positive(pv.mid[i])) {
      throw MalformedQuote(std::string("reconstructed ") + kPillarNames[i] + " vol is not positive");
    }
  }

  MarketSlice slice;
  slice.forward = compute_forward(row.spot, row.rates, row.expiry);
  slice.expiry = row.expiry;
  slice.mid_vols = pv.mid;
  slice.spreads = pv.spread;

  const double f = slice.forward;
  const double t = row.expiry;
  const double rf = row.rates.foreign_rate;
  slice.strikes[0] = delta_to_strike(f, pv.mid[0], t, 0.10, OptionType::put, conv, rf);
  slice.strikes[1] = delta_to_strike(f, pv.mid[1], t, 0.25, OptionType::put, conv, rf);
  slice.strikes[2] = atm_strike(f, pv.mid[2], t, conv);
  slice.strikes[3] = delta_to_strike(f, pv.mid[3], t, 0.25, OptionType::call, conv, rf);
  slice.strikes[4] = delta_to_strike(f, pv.mid[4], t, 0.10, OptionType::call, conv, rf);

  for (std::size_t i = 1; i < 5; ++i) {
    if (!(slice.strikes[i] > slice.strikes[i - 1])) {
      throw MalformedQuote("strikes from " + format_date(row.observation_date) + " " + row.tenor +
                           " are not strictly increasing");
    }
  }
  return slice;
}

}  // namespace sabr
