#pragma once

// FX smile quotes, quoting conventions and delta/strike conversion.
//
// Exchange rates follow the FOR-DOM convention: S is the number of domestic
// units per foreign unit (EURGBP: GBP per EUR). Volatilities are decimals.

#include <array>
#include <chrono>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace sabr {

struct RateCurvePoint {
  double domestic_rate = 0.0;  // continuously compounded, per year
  double foreign_rate = 0.0;
};

enum class OptionType : int { put = -1, call = 1 };

constexpr double phi(OptionType t) noexcept { return static_cast<int>(t); }

enum class DeltaStyle { spot, forward };
enum class AtmStyle { delta_neutral_straddle, at_the_forward };
enum class StrangleStyle { smile_strangle };

struct QuoteConvention {
  DeltaStyle delta_style = DeltaStyle::forward;
  bool premium_adjusted = false;
  AtmStyle atm_style = AtmStyle::delta_neutral_straddle;
  StrangleStyle strangle_style = StrangleStyle::smile_strangle;
};

std::string to_string(const QuoteConvention& conv);
/// Parses "forward" or "spot", optionally joined by '+' with "pa", "atf" or
/// "dns" (for example "spot+pa"). This is the command-line syntax.
QuoteConvention parse_convention(const std::string& text);

struct BidAsk {
  double bid = 0.0;
  double ask = 0.0;

  double mid() const noexcept { return 0.5 * (bid + ask); }
  double spread() const noexcept { return ask - bid; }
};

/// Five per-delta volatility quotes ordered 10P, 25P, ATM, 25C, 10C.
struct DeltaVolPayload {
  std::array<BidAsk, 5> vols;
};

/// Broker-style quotes: ATM straddle, risk reversals and strangles.
struct BrokerPayload {
  BidAsk atm;
  BidAsk rr25;
  BidAsk rr10;
  BidAsk str25;
  BidAsk str10;
};

using QuotePayload = std::variant<DeltaVolPayload, BrokerPayload>;

struct SmileQuoteRow {
  std::chrono::year_month_day observation_date{};
  std::string tenor;
  double expiry = 0.0;  // year fraction T
  double spot = 0.0;
  RateCurvePoint rates;
  QuotePayload payload;

  void validate() const;
};

/// One maturity's calibration target.
///
/// Points are ordered K_{10,-1} < K_{25,-1} < K_ATM < K_{25,1} < K_{10,1}.
struct MarketSlice {
  double forward = 0.0;
  double expiry = 0.0;
  std::array<double, 5> strikes{};
  std::array<double, 5> mid_vols{};
  std::array<double, 5> spreads{};

  void validate() const;
};

/// Labels for the five smile pillars, in slice order.
inline constexpr std::array<const char*, 5> kPillarNames = {"10P", "25P", "ATM", "25C", "10C"};

double compute_forward(double spot, const RateCurvePoint& rates, double tau);

/// Black-Scholes delta under the given convention. The sign follows phi:
/// calls are positive, puts negative. `foreign_rate` only matters for spot
/// deltas.
double bsm_delta(double forward, double strike, double sigma, double expiry, OptionType type,
                 const QuoteConvention& conv, double foreign_rate = 0.0);

/// Strike whose delta equals phi * delta (delta in (0,1)).
///
/// Non-premium-adjusted deltas invert in closed form. Premium-adjusted deltas
/// are solved by bracketed root finding on [F e^{-6 sigma sqrt T}, F e^{6 sigma sqrt T}];
/// for calls the larger-strike root is returned.
double delta_to_strike(double forward, double sigma, double expiry, double delta, OptionType type,
                       const QuoteConvention& conv, double foreign_rate = 0.0);

double atm_strike(double forward, double sigma, double expiry, const QuoteConvention& conv);

/// Per-pillar mid vols and spreads implied by a row's payload, before strike
/// conversion. Broker quotes are combined with the smile-strangle rule
/// sigma_{x,+-1} = ATM + STR_x +- RR_x / 2; bid/ask combine by interval arithmetic.
struct PillarVols {
  std::array<double, 5> mid{};
  std::array<double, 5> spread{};
};
PillarVols pillar_vols(const QuotePayload& payload);

MarketSlice quotes_to_slice(const SmileQuoteRow& row, const QuoteConvention& conv);

// Calendar helpers -------------------------------------------------------

std::chrono::year_month_day parse_date(const std::string& iso);
std::string format_date(const std::chrono::year_month_day& d);
/// Expiry date for a tenor label such as "1W", "2M", "1Y" or "3D".
std::chrono::year_month_day add_tenor(const std::chrono::year_month_day& start,
                                      const std::string& tenor);
/// ACT/365 fixed year fraction.
double act365(const std::chrono::year_month_day& from, const std::chrono::year_month_day& to);

// CSV ingestion ------------------------------------------------------------

/// Reads the quote file. Columns: date, tenor, T, spot, r_dom, r_for followed
/// by either vol_{10p,25p,atm,25c,10c}_{bid,ask} or
/// {atm,rr25,rr10,str25,str10}_{bid,ask}. An empty T is resolved from the
/// tenor with ACT/365.
std::vector<SmileQuoteRow> read_quotes_csv(const std::filesystem::path& path);
std::vector<SmileQuoteRow> parse_quotes_csv(const std::string& text);

/// Writes rows in the per-delta payload layout (broker rows are written in the
/// broker layout; mixing both in one file is rejected).
std::string format_quotes_csv(const std::vector<SmileQuoteRow>& rows);

}  // namespace sabr
