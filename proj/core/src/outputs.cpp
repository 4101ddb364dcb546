#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <system_error>

#include <json.hpp>

#include "csv_util.hpp"
#include "sabr/errors.hpp"
#include "sabr/pipeline.hpp"

#ifndef SABR_DEFECT_VERSION
#define SABR_DEFECT_VERSION "unknown"
#endif

namespace sabr {
namespace {

using nlohmann::json;

// Rounded to 9 significant digits; the JSON writer then prints the short form.
double r9(double x) { return std::strtod(detail::fmt9(x).c_str(), nullptr); }

json vec9(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(r9(x));
  return out;
}

template <std::size_t N>
json arr9(const std::array<double, N>& v) {
  json out = json::array();
  for (double x : v) out.push_back(r9(x));
  return out;
}

json theta_json(const SabrParams& t) {
  return {{"alpha", r9(t.alpha)}, {"nu", r9(t.nu)}, {"rho", r9(t.rho)}};
}

json density_json(const DensityCurve& c) {
  return {{"bandwidth", r9(c.bandwidth)}, {"grid", vec9(c.grid)}, {"density", vec9(c.density)}};
}

json posterior_json(const SliceResult& s, const RunConfig& cfg) {
  const auto& sum = s.summary;
  json map = theta_json(s.map.theta);
  map["log_posterior"] = r9(s.map.log_posterior);
  map["defect"] = r9(sum.map_defect);
  map["converged"] = s.map.converged;
  map["start_repaired"] = s.map.start_repaired;
  json cm = theta_json(sum.cm_theta);
  cm["defect"] = r9(sum.cm_defect);
  return {
      {"date", format_date(s.entry.date)},
      {"tenor", s.entry.tenor},
      {"seed", s.seed},
      {"soft_constraint", s.soft_constraint},
      {"slice",
       {{"forward", r9(s.slice.forward)},
        {"expiry", r9(s.slice.expiry)},
        {"strikes", arr9(s.slice.strikes)},
        {"mid_vols", arr9(s.slice.mid_vols)},
        {"spreads", arr9(s.slice.spreads)}}},
      {"map", map},
      {"cm", cm},
      {"credible_interval",
       {{"level", r9(sum.level)},
        {"lo", r9(sum.defect_credible_interval.first)},
        {"hi", r9(sum.defect_credible_interval.second)},
        {"cm_outside_interval", sum.interval_warning}}},
      {"chain",
       {{"n_samples", cfg.chain.n_samples},
        {"burn_in_fraction", r9(cfg.chain.burn_in_fraction)},
        {"n_retained", sum.n_retained},
        {"acceptance_rate", r9(sum.acceptance_rate)}}},
      {"kde",
       {{"alpha", density_json(sum.alpha_density)},
        {"nu", density_json(sum.nu_density)},
        {"rho", density_json(sum.rho_density)},
        {"defect", density_json(sum.defect_density)}}},
  };
}

json config_json(const RunConfig& cfg) {
  json schedule = json::array();
  for (const auto& e : cfg.expiry_schedule) {
    schedule.push_back({{"date", format_date(e.date)}, {"tenor", e.tenor}});
  }
  const auto& c = cfg.chain;
  return {
      {"input", cfg.input_path.string()},
      {"convention", to_string(cfg.convention)},
      {"credible_level", r9(cfg.credible_level)},
      {"noise_vol_points", r9(cfg.noise_vol_points)},
      {"soft_constraint_rerun", cfg.soft_constraint_rerun},
      {"chain",
       {{"n_samples", c.n_samples},
        {"burn_in_fraction", r9(c.burn_in_fraction)},
        {"seed", c.seed},
        {"initial_proposal_scale",
         {r9(c.initial_proposal_scale[0]), r9(c.initial_proposal_scale[1]),
          r9(c.initial_proposal_scale[2])}},
        {"adaptation_start", c.adaptation_start},
        {"adaptation_epsilon", r9(c.adaptation_epsilon)}}},
      {"schedule", schedule},
  };
}

std::string chain_csv(const SliceResult& s) {
  std::string out = "alpha,nu,rho,defect\n";
  char buf[128];
  for (Eigen::Index i = 0; i < s.retained.rows(); ++i) {
    const SabrParams t{s.retained(i, 0), s.retained(i, 1), s.retained(i, 2)};
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t.alpha, t.nu, t.rho,
                  defect_indicator(t));
    out += buf;
  }
  return out;
}

}  // namespace

std::string format_fever_csv(const std::vector<FeverPoint>& points) {
  using detail::fmt9;
  std::string out = std::string(kFeverCsvHeader) + "\n";
  for (const auto& p : points) {
    out += format_date(p.observation_date) + ',' + p.tenor + ',' + fmt9(p.cm_defect) + ',' +
           fmt9(p.lo) + ',' + fmt9(p.hi) + ',' + fmt9(p.map_defect) + ',' +
           fmt9(p.acceptance_rate) + ',' + std::to_string(p.n_retained) + '\n';
  }
  return out;
}

std::vector<FeverPoint> parse_fever_csv(const std::string& text) {
  const auto table = detail::CsvTable::parse(text);
  for (const char* col : {"date", "tenor", "cm_defect", "lo", "hi", "map_defect", "acceptance",
                          "n_retained"}) {
    if (!table.has_column(col)) throw MalformedQuote(std::string("fever CSV lacks column ") + col);
  }
  std::vector<FeverPoint> out;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    FeverPoint p;
    p.observation_date = parse_date(table.cell(r, "date"));
    p.tenor = table.cell(r, "tenor");
    p.cm_defect = table.number(r, "cm_defect");
    p.lo = table.number(r, "lo");
    p.hi = table.number(r, "hi");
    p.map_defect = table.number(r, "map_defect");
    p.acceptance_rate = table.number(r, "acceptance");
    p.n_retained = static_cast<std::size_t>(table.number(r, "n_retained"));
    out.push_back(std::move(p));
  }
  return out;
}

void emit_outputs(const FeverRun& run, const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  detail::write_text_file(out_dir / "fever_curve.csv", format_fever_csv(run.points()));

  json slices = json::array();
  for (const auto& s : run.slices) {
    const std::string date = format_date(s.entry.date);
    detail::write_text_file(out_dir / ("posterior_" + date + ".json"), posterior_json(s, cfg).dump(2) + "\n");
    if (cfg.dump_chains) detail::write_text_file(out_dir / ("chain_" + date + ".csv"), chain_csv(s));
    slices.push_back({{"date", date}, {"tenor", s.entry.tenor}, {"seed", s.seed},
                      {"soft_constraint", s.soft_constraint},
                      {"cm_outside_interval", s.summary.interval_warning}});
  }
  json failures = json::array();
  for (const auto& f : run.failures) {
    failures.push_back({{"date", format_date(f.entry.date)}, {"tenor", f.entry.tenor},
                        {"reason", f.reason}});
  }
  const json report = {
      {"tool", "sabr-defect"},
      {"version", SABR_DEFECT_VERSION},
      {"config", config_json(cfg)},
      {"slices", slices},
      {"failures", failures},
      {"status", run.failures.empty() ? "ok" : (run.slices.empty() ? "failed" : "partial")},
  };
  detail::write_text_file(out_dir / "run_report.json", report.dump(2) + "\n");
}

std::string validation_report_json(const ValidationReport& report, const ValidateConfig& cfg) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"value", r9(c.value)},
                      {"reference", r9(c.reference)},
                      {"tolerance", r9(c.tolerance)},
                      {"passed", c.passed}});
  }
  const json out = {{"tool", "sabr-defect"},
                    {"version", SABR_DEFECT_VERSION},
                    {"n_paths", cfg.n_paths},
                    {"seed", cfg.seed},
                    {"checks", checks},
                    {"all_passed", report.all_passed()}};
  return out.dump(2) + "\n";
}

}  // namespace sabr
