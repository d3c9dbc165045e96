#include "benchmark/benchmark.h"
#include "dapinn/network.hpp"
#include "dapinn/tape.hpp"

using namespace dapinn;

// Recording plus one reverse sweep for a jet forward pass.
static void BM_JetRecordReverse(benchmark::State& state) {
  MLPArchitecture arch{2, 1, static_cast<int>(state.range(0)), 24};
  const ParameterVector params = init_params(arch, 1);
  const std::vector<double> x{0.3, 0.7};
  for (auto _ : state) {
    Tape tape;
    std::vector<ScalarNode> theta_nodes;
    const auto jets = forward_jet(tape, arch, params.theta, x, &theta_nodes);
    ScalarNode lap = tape.add(jets[0].d2[0], jets[0].d2[1]);
    ScalarNode loss = tape.mul(lap, lap);
    benchmark::DoNotOptimize(reverse_gradient(loss, theta_nodes));
    state.counters["nodes"] = static_cast<double>(tape.size());
  }
}
BENCHMARK(BM_JetRecordReverse)->Arg(4)->Arg(8);

// Replay-only forward pass over a prerecorded tape.
static void BM_TapeForwardReplay(benchmark::State& state) {
  MLPArchitecture arch{2, 1, 4, 24};
  const ParameterVector params = init_params(arch, 1);
  Tape tape;
  std::vector<ScalarNode> theta_nodes;
  const auto jets = forward_jet(tape, arch, params.theta,
                                std::vector<double>{0.3, 0.7}, &theta_nodes);
  benchmark::DoNotOptimize(jets);
  for (auto _ : state) {
    tape.forward();
    benchmark::DoNotOptimize(tape.values().data());
  }
  state.SetItemsProcessed(state.iterations() * tape.size());
}
BENCHMARK(BM_TapeForwardReplay);
