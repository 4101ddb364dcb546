// sabr-defect: fever-curve batch runs, single-slice calibration, Monte Carlo
// validation and synthetic quote generation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sabr/errors.hpp"
#include "sabr/pipeline.hpp"
#include "sabr/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;
constexpr int kExitPartial = 3;

struct ChainFlags {
  std::size_t samples = 100000;
  double burn_in = 0.25;
  std::uint64_t seed = 20190410;
  double level = 0.9;
  std::string convention = "forward";
  double noise = 1.0;
  bool soft = false;
  unsigned threads = 1;

  void attach(CLI::App* app) {
    app->add_option("--samples", samples, "MCMC samples per slice")->capture_default_str();
    app->add_option("--burn-in", burn_in, "Burn-in fraction")->capture_default_str();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--level", level, "Credible interval level")->capture_default_str();
    app->add_option("--convention", convention,
                    "Delta convention: forward|spot, optionally +pa and +atf (e.g. spot+pa)")
        ->capture_default_str();
    app->add_option("--noise", noise, "Noise standard deviation in vol points")->capture_default_str();
    app->add_flag("--soft-constraint", soft,
                  "Rerun infeasible slices with a bid-ask penalty instead of the hard bracket");
    app->add_option("--threads", threads, "Slices calibrated concurrently")->capture_default_str();
  }

  sabr::RunConfig to_config() const {
    sabr::RunConfig cfg;
    cfg.convention = sabr::parse_convention(convention);
    cfg.chain.n_samples = samples;
    cfg.chain.burn_in_fraction = burn_in;
    cfg.chain.seed = seed;
    cfg.credible_level = level;
    cfg.noise_vol_points = noise;
    cfg.soft_constraint_rerun = soft;
    cfg.threads = threads;
    return cfg;
  }
};

void print_point(const sabr::FeverPoint& p) {
  std::printf("%s %-3s cm=%.4f  90%%-ci=[%.4f, %.4f]  map=%.4f  acc=%.3f\n",
              sabr::format_date(p.observation_date).c_str(), p.tenor.c_str(), p.cm_defect, p.lo,
              p.hi, p.map_defect, p.acceptance_rate);
}

int report_failures(const sabr::FeverRun& run) {
  for (const auto& f : run.failures) {
    std::fprintf(stderr, "slice %s %s failed: %s\n", sabr::format_date(f.entry.date).c_str(),
                 f.entry.tenor.c_str(), f.reason.c_str());
  }
  return run.failures.empty() ? kExitOk : kExitPartial;
}

// Indicator path used for demo data: a bump in rho centred on 10 April.
sabr::SabrParams demo_theta(const std::chrono::year_month_day& d) {
  using namespace std::chrono;
  const double doy = (sys_days{d} - sys_days{year_month_day{d.year(), January, day{1}}}).count();
  const double bump = std::exp(-std::pow((doy - 99.0) / 25.0, 2));
  return {0.065 + 0.02 * bump, 0.9 - 0.2 * bump, 0.1 + 0.45 * bump};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian SABR calibration and martingale-defect fever curves"};
  app.require_subcommand(1);

  ChainFlags fever_flags;
  std::string fever_input, fever_schedule, fever_out;
  bool dump_chains = false;
  auto* fever = app.add_subcommand("fever", "Calibrate every scheduled slice and write the fever curve");
  fever->add_option("--input", fever_input, "Quote CSV")->required();
  fever->add_option("--schedule", fever_schedule, "Schedule CSV with date,tenor")->required();
  fever->add_option("--out", fever_out, "Output directory")->required();
  fever->add_flag("--dump-chains", dump_chains, "Also write retained chains as chain_<date>.csv");
  fever_flags.attach(fever);

  ChainFlags slice_flags;
  std::string slice_input, slice_date, slice_tenor, slice_out;
  auto* slice = app.add_subcommand("slice", "Calibrate one (date, tenor) slice");
  slice->add_option("--input", slice_input, "Quote CSV")->required();
  slice->add_option("--date", slice_date, "Observation date YYYY-MM-DD")->required();
  slice->add_option("--tenor", slice_tenor, "Tenor label, e.g. 2W")->required();
  slice->add_option("--out", slice_out, "Optional output directory");
  slice_flags.attach(slice);

  sabr::ValidateConfig vcfg;
  std::string validate_out;
  auto* validate = app.add_subcommand("validate", "Run the Monte Carlo validation grid");
  validate->add_option("--paths", vcfg.n_paths, "Paths per estimate")->capture_default_str();
  validate->add_option("--seed", vcfg.seed, "Seed")->capture_default_str();
  validate->add_option("--threads", vcfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  validate->add_option("--out", validate_out, "Write the JSON report to this file");

  std::string synth_schedule, synth_out, synth_convention = "forward";
  std::uint64_t synth_seed = 2019;
  double synth_noise = 0.1;
  auto* synth = app.add_subcommand("synth", "Write synthetic quotes for a schedule");
  synth->add_option("--schedule", synth_schedule, "Schedule CSV with date,tenor")->required();
  synth->add_option("--out", synth_out, "Quote CSV to write")->required();
  synth->add_option("--seed", synth_seed, "Noise seed")->capture_default_str();
  synth->add_option("--noise", synth_noise, "Mid-vol noise in vol points")->capture_default_str();
  synth->add_option("--convention", synth_convention, "Delta convention")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*fever) {
      sabr::RunConfig cfg = fever_flags.to_config();
      cfg.input_path = fever_input;
      cfg.output_dir = fever_out;
      cfg.dump_chains = dump_chains;
      cfg.expiry_schedule = sabr::read_schedule_csv(fever_schedule);
      const auto run = sabr::run_fever_curve(cfg);
      sabr::emit_outputs(run, cfg, cfg.output_dir);
      for (const auto& p : run.points()) print_point(p);
      return report_failures(run);
    }

    if (*slice) {
      sabr::RunConfig cfg = slice_flags.to_config();
      cfg.mode = sabr::RunMode::single_slice;
      cfg.input_path = slice_input;
      cfg.expiry_schedule = {{sabr::parse_date(slice_date), slice_tenor}};
      const auto run = sabr::run_fever_curve(cfg);
      if (!slice_out.empty()) sabr::emit_outputs(run, cfg, slice_out);
      for (const auto& s : run.slices) {
        print_point(s.point);
        std::printf("MAP  alpha=%.6f nu=%.6f rho=%.6f\n", s.map.theta.alpha, s.map.theta.nu,
                    s.map.theta.rho);
        std::printf("CM   alpha=%.6f nu=%.6f rho=%.6f\n", s.summary.cm_theta.alpha,
                    s.summary.cm_theta.nu, s.summary.cm_theta.rho);
      }
      return report_failures(run);
    }

    if (*validate) {
      const auto report = sabr::run_validate(vcfg);
      for (const auto& c : report.checks) {
        std::printf("[%s] %s: %.6g vs %.6g (tol %.3g)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    c.value, c.reference, c.tolerance);
      }
      if (!validate_out.empty()) {
        std::ofstream(validate_out) << sabr::validation_report_json(report, vcfg);
      }
      return report.all_passed() ? kExitOk : kExitValidation;
    }

    if (*synth) {
      const auto conv = sabr::parse_convention(synth_convention);
      std::vector<sabr::SmileQuoteRow> rows;
      std::uint64_t k = 0;
      for (const auto& e : sabr::read_schedule_csv(synth_schedule)) {
        sabr::SyntheticQuoteSpec spec;
        spec.date = e.date;
        spec.tenor = e.tenor;
        spec.theta = demo_theta(e.date);
        spec.noise_sd = synth_noise / 100.0;
        rows.push_back(sabr::synthesize_quote(spec, conv, synth_seed + k++));
      }
      std::ofstream out(synth_out);
      out << "# Synthetic quotes generated by sabr-defect synth; not market data.\n"
          << sabr::format_quotes_csv(rows);
      if (!out) throw sabr::IoError("cannot write '" + synth_out + "'");
      return kExitOk;
    }
  } catch (const sabr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
