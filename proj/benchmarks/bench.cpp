#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "geodesign/design_pipeline.hpp"
#include "geodesign/rng.hpp"
#include "geodesign/synthetic.hpp"

namespace {

using namespace geodesign;

DistanceMatrix random_distance_matrix(int n_geos, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 100.0);
  DistanceMatrix dm;
  dm.geos.reserve(static_cast<std::size_t>(n_geos));
  for (int i = 0; i < n_geos; ++i) dm.geos.push_back("g" + std::to_string(1000 + i));
  dm.d.assign(static_cast<std::size_t>(n_geos) * n_geos, 0.0);
  for (int i = 0; i < n_geos; ++i)
    for (int j = i + 1; j < n_geos; ++j) {
      const double v = u(rng);
      dm.d[static_cast<std::size_t>(i) * n_geos + j] = v;
      dm.d[static_cast<std::size_t>(j) * n_geos + i] = v;
    }
  return dm;
}

PairExperimentData random_experiment(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  PairExperimentData data;
  data.x.reserve(static_cast<std::size_t>(n));
  data.y.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    data.x.push_back(1.0 + 0.2 * g(rng));
    data.y.push_back(2.0 * data.x.back() + g(rng));
  }
  return data;
}

void BM_OptimalPairs(benchmark::State& state) {
  const int n_geos = static_cast<int>(state.range(0));
  const DistanceMatrix dm = random_distance_matrix(n_geos, 7);
  const int n = n_geos / 4;
  for (auto _ : state) benchmark::DoNotOptimize(optimal_pairs(dm, n));
}
BENCHMARK(BM_OptimalPairs)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_TrimmedEstimate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PairExperimentData data = random_experiment(n, 11);
  TrimSpec spec;
  spec.max_trim_rate = 0.10;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(data, spec));
}
BENCHMARK(BM_TrimmedEstimate)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_EvaluateRmse(benchmark::State& state) {
  SynthConfig gen;
  gen.seed = 3;
  const GeoPanel panel = generate_panel(gen).panel;
  const PeriodSplit split = split_periods(panel, 14, 7);
  const PairSet pairs =
      optimal_pairs(distance_matrix(block_totals(panel, split.pairing, 7)), 50);
  EvalInputs in;
  in.units = paired_units_from_panel(panel, pairs, split.evaluation).units;
  in.budget = 1e6;
  in.replicates = static_cast<int>(state.range(0));
  in.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_rmse(in));
}
BENCHMARK(BM_EvaluateRmse)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
