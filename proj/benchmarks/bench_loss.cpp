#include "benchmark/benchmark.h"
#include "dapinn/training.hpp"

using namespace dapinn;

// Full loss + gradient for the elliptic benchmark problem at N = 20 x 20,
// the configuration the result tables start from.
static void BM_LossGradientPoisson400(benchmark::State& state) {
  const ProblemSpec spec = poisson_spec();
  SetSizes sizes;
  sizes.n_total = 400;
  const TrainingSets sets = make_training_sets(spec, sizes, 7);
  const auto data = make_data(spec, sets.data, 0.0, 7);
  MLPArchitecture arch{2, 1, 4, 24};
  LossEvaluator eval(spec, arch, sets, data, 0.001, 0.0, 2);
  const ParameterVector theta = init_params(arch, 7);
  std::vector<double> grad(theta.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.value_and_gradient(theta.theta, grad));
  }
}
BENCHMARK(BM_LossGradientPoisson400);

static void BM_LossGradientHeatND(benchmark::State& state) {
  const ProblemSpec spec = heatnd_spec(static_cast<int>(state.range(0)));
  const TrainingSets sets = make_training_sets(spec, SetSizes{}, 7);
  const auto data = make_data(spec, sets.data, 0.0, 7);
  MLPArchitecture arch{spec.input_dim, 1, 4, 20};
  LossEvaluator eval(spec, arch, sets, data, 0.01, 0.0, 2);
  const ParameterVector theta = init_params(arch, 7);
  std::vector<double> grad(theta.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.value_and_gradient(theta.theta, grad));
  }
}
BENCHMARK(BM_LossGradientHeatND)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
