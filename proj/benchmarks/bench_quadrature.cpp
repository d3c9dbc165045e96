#include "benchmark/benchmark.h"
#include "dapinn/quadrature.hpp"

using namespace dapinn;

static void BM_SobolPoints(benchmark::State& state) {
  const Box box = Box::unit(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sobol_points(4096, box));
  }
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_SobolPoints)->Arg(2)->Arg(16)->Arg(64);

static void BM_MidpointGrid(benchmark::State& state) {
  const std::vector<int> res{200, 200};
  for (auto _ : state) {
    benchmark::DoNotOptimize(midpoint_grid(res, Geometry(Box::unit(2))));
  }
}
BENCHMARK(BM_MidpointGrid);
