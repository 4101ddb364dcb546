#include <benchmark/benchmark.h>

#include "sabr/bayes_engine.hpp"
#include "sabr/mc_oracle.hpp"
#include "sabr/synthetic.hpp"

using namespace sabr;

namespace {

MarketSlice demo_slice() {
  SyntheticQuoteSpec q;
  q.date = parse_date("2019-04-10");
  q.tenor = "6M";
  const QuoteConvention conv;
  return quotes_to_slice(synthesize_quote(q, conv, 1), conv);
}

void BM_SabrImpliedVol(benchmark::State& state) {
  const SabrParams th{0.08, 0.9, 0.45};
  double k = 0.8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sabr_implied_vol(0.88, k, 0.5, th));
    k = k < 0.97 ? k + 1e-4 : 0.8;
  }
}
BENCHMARK(BM_SabrImpliedVol);

void BM_BsmImpliedVol(benchmark::State& state) {
  const VanillaSpec spec{0.92, 0.5, OptionType::call, 0.0075};
  const double price = bsm_price(0.88, spec, 0.07);
  for (auto _ : state) benchmark::DoNotOptimize(bsm_implied_vol(price, 0.88, spec));
}
BENCHMARK(BM_BsmImpliedVol);

void BM_LogPosterior(benchmark::State& state) {
  PosteriorSpec spec;
  spec.slice = demo_slice();
  const PosteriorEvaluator eval(spec);
  const Eigen::Vector3d theta(0.08, 0.9, 0.45);
  for (auto _ : state) benchmark::DoNotOptimize(eval(theta));
}
BENCHMARK(BM_LogPosterior);

void BM_SliceChain(benchmark::State& state) {
  PosteriorSpec spec;
  spec.slice = demo_slice();
  const auto map = nelder_mead_map(spec, default_map_start(spec.slice));
  ChainConfig cfg;
  cfg.n_samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(adaptive_metropolis(spec, map.theta, cfg).acceptance_rate);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SliceChain)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_McDefect(benchmark::State& state) {
  PathConfig cfg;
  cfg.n_paths = static_cast<std::size_t>(state.range(0));
  cfg.n_steps = 50;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(mc_defect(1.0, 5.0, {0.15, 1.0, 0.5}, cfg).point_estimate);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McDefect)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_ExplosionProbability(benchmark::State& state) {
  PathConfig cfg;
  cfg.n_paths = static_cast<std::size_t>(state.range(0));
  cfg.n_steps = 50;
  cfg.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_explosion_probability({0.15, 1.0, 0.5}, 10.0, cfg).point_estimate);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExplosionProbability)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
