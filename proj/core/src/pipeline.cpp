#include "sabr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <optional>
#include <set>
#include <thread>

#include "csv_util.hpp"
#include "sabr/errors.hpp"

namespace sabr {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string entry_label(const ScheduleEntry& e) { return format_date(e.date) + " " + e.tenor; }

}  // namespace

std::vector<ScheduleEntry> parse_schedule_csv(const std::string& text) {
  const auto table = detail::CsvTable::parse(text);
  if (!table.has_column("date") || !table.has_column("tenor")) {
    throw ConfigError("schedule needs 'date' and 'tenor' columns");
  }
  std::vector<ScheduleEntry> out;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    ScheduleEntry e;
    try {
      e.date = parse_date(table.cell(r, "date"));
    } catch (const MalformedQuote& ex) {
      throw ConfigError("schedule line " + std::to_string(table.line_of(r)) + ": " + ex.what());
    }
    e.tenor = detail::trim(table.cell(r, "tenor"));
    if (e.tenor.empty()) {
      throw ConfigError("schedule line " + std::to_string(table.line_of(r)) + ": empty tenor");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ScheduleEntry> read_schedule_csv(const std::filesystem::path& path) {
  return parse_schedule_csv(detail::read_text_file(path));
}

void RunConfig::validate() const {
  if (expiry_schedule.empty()) throw ConfigError("the expiry schedule is empty");
  std::set<std::chrono::sys_days> seen;
  for (const auto& e : expiry_schedule) {
    if (!seen.insert(std::chrono::sys_days{e.date}).second) {
      throw ConfigError("schedule lists " + format_date(e.date) + " more than once");
    }
  }
  if (!(credible_level > 0.5 && credible_level < 0.999)) {
    throw ConfigError("credible level must lie in (0.5, 0.999)");
  }
  if (!(noise_vol_points > 0.0) || !std::isfinite(noise_vol_points)) {
    throw ConfigError("noise standard deviation must be > 0");
  }
  try {
    chain.validate();
  } catch (const InvalidInput& ex) {
    throw ConfigError(ex.what());
  }
}

std::vector<FeverPoint> FeverRun::points() const {
  std::vector<FeverPoint> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(s.point);
  return out;
}

std::vector<PosteriorSummary> FeverRun::summaries() const {
  std::vector<PosteriorSummary> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(s.summary);
  return out;
}

std::uint64_t slice_seed(std::uint64_t master, const std::chrono::year_month_day& date,
                         const std::string& tenor) {
  // FNV-1a over "YYYY-MM-DD|tenor", then mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : format_date(date) + "|" + tenor) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h ^ splitmix64(master));
}

SliceResult calibrate_slice(const SmileQuoteRow& row, const RunConfig& cfg, bool keep_chain) {
  SliceResult res;
  res.entry = {row.observation_date, row.tenor};
  res.seed = slice_seed(cfg.chain.seed, row.observation_date, row.tenor);
  res.slice = quotes_to_slice(row, cfg.convention);

  PosteriorSpec spec;
  spec.slice = res.slice;
  const double sd = cfg.noise_vol_points / 100.0;
  spec.noise_covariance = sd * sd * Matrix5d::Identity();

  MapOptions map_opts;
  map_opts.seed = splitmix64(res.seed);
  const SabrParams start = default_map_start(res.slice);
  try {
    res.map = nelder_mead_map(spec, start, map_opts);
  } catch (const CalibrationInfeasible&) {
    if (!cfg.soft_constraint_rerun) throw;
    spec.soft_constraint = true;
    res.soft_constraint = true;
    res.map = nelder_mead_map(spec, start, map_opts);
  }

  ChainConfig chain_cfg = cfg.chain;
  chain_cfg.seed = res.seed;
  const ChainResult chain = adaptive_metropolis(spec, res.map.theta, chain_cfg);
  res.summary = summarize(chain, chain_cfg, cfg.credible_level);

  res.point.observation_date = row.observation_date;
  res.point.tenor = row.tenor;
  res.point.cm_defect = res.summary.cm_defect;
  res.point.lo = res.summary.defect_credible_interval.first;
  res.point.hi = res.summary.defect_credible_interval.second;
  res.point.map_defect = res.summary.map_defect;
  res.point.acceptance_rate = res.summary.acceptance_rate;
  res.point.n_retained = res.summary.n_retained;

  if (keep_chain) {
    const auto kept = static_cast<Eigen::Index>(res.summary.n_retained);
    res.retained = chain.samples.bottomRows(kept);
  }
  return res;
}

FeverRun run_fever_curve(const RunConfig& cfg, const std::vector<SmileQuoteRow>& quotes) {
  cfg.validate();

  std::vector<ScheduleEntry> schedule = cfg.expiry_schedule;
  std::stable_sort(schedule.begin(), schedule.end(), [](const auto& a, const auto& b) {
    return std::chrono::sys_days{a.date} < std::chrono::sys_days{b.date};
  });

  std::vector<const SmileQuoteRow*> rows;
  for (const auto& e : schedule) {
    const auto it = std::find_if(quotes.begin(), quotes.end(), [&](const SmileQuoteRow& q) {
      return q.observation_date == e.date && q.tenor == e.tenor;
    });
    if (it == quotes.end()) throw ConfigError("no quote for schedule entry " + entry_label(e));
    rows.push_back(&*it);
  }

  const std::size_t n = rows.size();
  std::vector<std::optional<SliceResult>> results(n);
  std::vector<std::string> errors(n);
  auto work = [&](std::size_t i) {
    try {
      results[i] = calibrate_slice(*rows[i], cfg, cfg.dump_chains);
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  };

  unsigned workers = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  FeverRun run;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) {
      run.slices.push_back(std::move(*results[i]));
    } else {
      run.failures.push_back({schedule[i], errors[i]});
    }
  }
  return run;
}

FeverRun run_fever_curve(const RunConfig& cfg) {
  cfg.validate();
  std::vector<SmileQuoteRow> quotes;
  try {
    quotes = read_quotes_csv(cfg.input_path);
  } catch (const IoError& ex) {
    throw ConfigError(ex.what());
  } catch (const Error& ex) {
    throw ConfigError(cfg.input_path.string() + ": " + ex.what());
  }
  return run_fever_curve(cfg, quotes);
}

}  // namespace sabr
