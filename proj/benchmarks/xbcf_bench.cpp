#include <benchmark/benchmark.h>

#include <vector>

#include "xbcf/conjugate.hpp"
#include "xbcf/gfr.hpp"
#include "xbcf/simulation.hpp"
#include "xbcf/xbcf.hpp"

using namespace xbcf;

static void BM_LeafLogMarginal(benchmark::State& state) {
  const GroupedSuffStats s{120, 80, 14.5, -3.2};
  const GroupCoeffs c{0.7, -1.1};
  const GroupVariances v{1.3, 0.8};
  double nu = 0.02;
  for (auto _ : state) {
    benchmark::DoNotOptimize(leaf_log_marginal(s, c, v, nu));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_LeafLogMarginal);

static void BM_GrowFromRoot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = sim::generate({n, sim::Prognostic::nonlinear, sim::Treatment::heterogeneous, 3});
  const FeatureMatrix X(s.data.X);
  std::vector<double> r(s.data.y.begin(), s.data.y.end());
  const LeafModel leaf{{1.0, 1.0}, {1.0, 1.0}, 0.02};
  Rng rng(11);
  for (auto _ : state) benchmark::DoNotOptimize(grow_from_root(r, X, s.data.z, leaf, GrowOptions{}, rng));
}
BENCHMARK(BM_GrowFromRoot)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_XbcfFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = sim::generate({n, sim::Prognostic::linear, sim::Treatment::heterogeneous, 5});
  for (auto _ : state) benchmark::DoNotOptimize(fit(s.data, Hyperparams{}));
}
BENCHMARK(BM_XbcfFit)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_MAIN();
