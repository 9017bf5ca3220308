#include <benchmark/benchmark.h>

#include <vector>

#include "qfuse/atwm_plan.hpp"

namespace {

std::vector<int> channels(int first, int count) {
  std::vector<int> out(count);
  for (int i = 0; i < count; ++i) out[i] = first + i;
  return out;
}

void PlanPumps(benchmark::State& state) {
  const auto chans = channels(31, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto plan = qfuse::plan_pumps(chans, 100, 16667);
    benchmark::DoNotOptimize(plan);
  }
}
BENCHMARK(PlanPumps)->Arg(10)->Arg(20)->Arg(64);

void FuseTopologies(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = qfuse::plan_pumps(channels(31, n), 100, 16667, "A");
  const auto b = qfuse::plan_pumps(channels(31, n), 100, 16667, "B");
  for (auto _ : state) {
    auto fused = qfuse::fuse_topologies(a, b, 31, 31);
    benchmark::DoNotOptimize(fused);
  }
}
BENCHMARK(FuseTopologies)->Arg(10)->Arg(20);

void AlignmentSchedule(benchmark::State& state) {
  const auto survivors = channels(32, static_cast<int>(state.range(0)) - 1);
  for (auto _ : state) {
    auto settings = qfuse::alignment_schedule(survivors, survivors);
    benchmark::DoNotOptimize(settings);
  }
}
BENCHMARK(AlignmentSchedule)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
