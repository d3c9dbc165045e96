#include "benchmark/benchmark.h"
#include "dapinn/optim.hpp"

using namespace dapinn;

static void BM_LbfgsRosenbrock(benchmark::State& state) {
  const ObjectiveFn fn = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(lbfgs_minimize(fn, std::vector<double>{-1.2, 1.0}));
  }
}
BENCHMARK(BM_LbfgsRosenbrock);
