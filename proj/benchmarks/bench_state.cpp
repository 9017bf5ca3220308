#include <benchmark/benchmark.h>

#include "qfuse/quantum_state.hpp"
#include "qfuse/swap_engine.hpp"

namespace {

using namespace qfuse;

void TensorTwoPairs(benchmark::State& state) {
  const DensityMatrix bell = bell_state(BellKind::PhiPlus);
  for (auto _ : state) {
    auto joint = tensor(bell, bell);
    benchmark::DoNotOptimize(joint);
  }
}
BENCHMARK(TensorTwoPairs);

void BellDecompose(benchmark::State& state) {
  const DensityMatrix joint =
      tensor(bell_state(BellKind::PhiPlus), bell_state(BellKind::PsiMinus));
  for (auto _ : state) {
    auto dist = bell_decompose(joint, {0, 2}, {1, 3});
    benchmark::DoNotOptimize(dist);
  }
}
BENCHMARK(BellDecompose);

void ProjectAndTrace(benchmark::State& state) {
  const DensityMatrix joint = tensor(werner_state(BellKind::PhiPlus, 0.95),
                                     werner_state(BellKind::PhiPlus, 0.95));
  for (auto _ : state) {
    auto out = project_and_trace(joint, BellKind::PsiMinus, {1, 3});
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(ProjectAndTrace);

void SwappedStateDephased(benchmark::State& state) {
  const DensityMatrix in = bell_state(BellKind::PhiPlus);
  for (auto _ : state) {
    auto out = swapped_state(in, in, BsmOutcome::PsiMinus, 0.835);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(SwappedStateDephased);

void UhlmannFidelity(benchmark::State& state) {
  const DensityMatrix a = werner_state(BellKind::PhiPlus, 0.9);
  const DensityMatrix b = bell_state(BellKind::PhiPlus);
  for (auto _ : state) {
    double f = fidelity(a, b);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(UhlmannFidelity);

}  // namespace
