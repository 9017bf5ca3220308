#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qfuse/analysis.hpp"
#include "qfuse/photon_sim.hpp"
#include "qfuse/quantum_state.hpp"

namespace {

using namespace qfuse;

TimeTagStream uniform_tags(std::size_t count, std::int64_t span,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> dist(0, span - 1);
  TimeTagStream stream{"bench", std::vector<std::int64_t>(count)};
  for (auto& t : stream.tags_ps) t = dist(rng);
  std::sort(stream.tags_ps.begin(), stream.tags_ps.end());
  return stream;
}

void CrossCorrelate(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto a = uniform_tags(count, 1'000'000'000, 11);
  const auto b = uniform_tags(count, 1'000'000'000, 12);
  for (auto _ : state) {
    auto hist = cross_correlate(a, b, 100, 20000);
    benchmark::DoNotOptimize(hist);
  }
}
BENCHMARK(CrossCorrelate)->Arg(100000)->Arg(400000)
    ->Unit(benchmark::kMillisecond);

void FringeFit(benchmark::State& state) {
  const DensityMatrix source = werner_state(BellKind::PhiPlus, 0.835);
  const AnalyzerSetting diagonal(std::acos(-1.0) / 8, 0.0);
  std::vector<double> angles;
  for (int k = 0; k < 16; ++k) angles.push_back(k * std::acos(-1.0) / 8);
  const FringeScan scan = synthesize_fringe_scan_poisson(
      source, diagonal, angles, 1600.0, 1.0, 99);
  for (auto _ : state) {
    auto fit = fringe_visibility(scan, VisibilityMethod::Fit);
    benchmark::DoNotOptimize(fit);
  }
}
BENCHMARK(FringeFit);

}  // namespace
