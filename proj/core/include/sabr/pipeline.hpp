#pragma once

// Batch driver: per-date calibrations that produce the fever curve, the
// Monte Carlo validation grid and the output files.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sabr/bayes_engine.hpp"
#include "sabr/market_data.hpp"
#include "sabr/mc_oracle.hpp"

namespace sabr {

enum class RunMode { fever, single_slice, validate };

struct ScheduleEntry {
  std::chrono::year_month_day date{};
  std::string tenor;
};

/// Reads `date,tenor` rows (header required).
std::vector<ScheduleEntry> read_schedule_csv(const std::filesystem::path& path);
std::vector<ScheduleEntry> parse_schedule_csv(const std::string& text);

struct RunConfig {
  std::filesystem::path input_path;
  std::filesystem::path output_dir;
  QuoteConvention convention;
  ChainConfig chain;
  double credible_level = 0.9;
  std::vector<ScheduleEntry> expiry_schedule;
  RunMode mode = RunMode::fever;
  /// Noise standard deviation in vol points; Sigma = (sd / 100)^2 I.
  double noise_vol_points = 1.0;
  /// Rerun infeasible slices with the soft bid-ask penalty (non-reference behavior).
  bool soft_constraint_rerun = false;
  /// Write the retained chain of every slice as chain_<date>.csv.
  bool dump_chains = false;
  /// Slices processed concurrently; results do not depend on it.
  unsigned threads = 1;

  /// Throws ConfigError for an empty schedule, duplicate dates, a level
  /// outside (0.5, 0.999) or an invalid chain configuration.
  void validate() const;
};

struct FeverPoint {
  std::chrono::year_month_day observation_date{};
  std::string tenor;
  double cm_defect = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double map_defect = 0.0;
  double acceptance_rate = 0.0;
  std::size_t n_retained = 0;

  friend bool operator==(const FeverPoint&, const FeverPoint&) = default;
};

/// Everything produced for one schedule entry.
struct SliceResult {
  ScheduleEntry entry;
  std::uint64_t seed = 0;
  MarketSlice slice;
  MapResult map;
  PosteriorSummary summary;
  FeverPoint point;
  bool soft_constraint = false;
  /// Retained samples (alpha, nu, rho) when chains are kept.
  Eigen::Matrix<double, Eigen::Dynamic, 3> retained;
};

struct SliceFailure {
  ScheduleEntry entry;
  std::string reason;
};

struct FeverRun {
  std::vector<SliceResult> slices;   // date order
  std::vector<SliceFailure> failures;

  std::vector<FeverPoint> points() const;
  std::vector<PosteriorSummary> summaries() const;
};

/// Seed for one slice, mixed from the master seed, the date and the tenor.
std::uint64_t slice_seed(std::uint64_t master, const std::chrono::year_month_day& date,
                         const std::string& tenor);

/// quotes_to_slice -> nelder_mead_map -> adaptive_metropolis -> summarize.
/// Throws CalibrationInfeasible (or a conversion error) for unusable quotes.
SliceResult calibrate_slice(const SmileQuoteRow& row, const RunConfig& cfg, bool keep_chain = false);

/// Runs every schedule entry. Missing (date, tenor) pairs and unreadable
/// input are fatal (ConfigError / IoError); per-slice failures are recorded
/// and do not affect other slices.
FeverRun run_fever_curve(const RunConfig& cfg);
/// Same, on already parsed quotes.
FeverRun run_fever_curve(const RunConfig& cfg, const std::vector<SmileQuoteRow>& quotes);

// Validation ---------------------------------------------------------------

struct ValidateConfig {
  std::size_t n_paths = 20000;
  std::uint64_t seed = 11;
  unsigned threads = 0;
};

struct ValidationCheck {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const;
};

/// Monte Carlo checks: martingale rows for rho <= 0, the large-T indicator
/// limit, the defect identity, expansion versus Monte Carlo implied vols and
/// a vol_cap sensitivity sweep over {1e4, 1e6, 1e8}.
ValidationReport run_validate(const ValidateConfig& cfg);

// Output -------------------------------------------------------------------

inline constexpr const char* kFeverCsvHeader =
    "date,tenor,cm_defect,lo,hi,map_defect,acceptance,n_retained";

std::string format_fever_csv(const std::vector<FeverPoint>& points);
std::vector<FeverPoint> parse_fever_csv(const std::string& text);

/// Writes fever_curve.csv, posterior_<date>.json per slice, run_report.json
/// and, when requested, chain_<date>.csv. Numbers carry 9 significant digits.
void emit_outputs(const FeverRun& run, const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Report of a validation run as JSON text.
std::string validation_report_json(const ValidationReport& report, const ValidateConfig& cfg);

}  // namespace sabr
