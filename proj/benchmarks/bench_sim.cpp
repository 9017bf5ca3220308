#include <benchmark/benchmark.h>

#include <cstdint>
#include <map>
#include <vector>

#include "qfuse/analysis.hpp"
#include "qfuse/atwm_plan.hpp"
#include "qfuse/photon_sim.hpp"

namespace {

using namespace qfuse;

std::vector<int> channels(int first, int count) {
  std::vector<int> out(count);
  for (int i = 0; i < count; ++i) out[i] = first + i;
  return out;
}

struct Bench4 {
  PumpSchedule plan = plan_pumps(channels(31, 4), 300, 16667);
  SourceParams source{0.01, 60e6};
  std::map<int, DetectorParams> detectors;
  std::map<int, LinkParams> links;
  Bench4() {
    for (const ItuChannel& ch : plan.channels) {
      detectors[ch.channel_number] = DetectorParams{0.8, 100.0, 20.0};
      links[ch.channel_number] = LinkParams{0.5};
    }
  }
};

void SimulateFourUsers(benchmark::State& state) {
  Bench4 b;
  const double duration = 0.02;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto streams =
        simulate_network(b.plan, b.source, b.detectors, b.links, duration,
                         seed++);
    benchmark::DoNotOptimize(streams);
  }
  state.SetItemsProcessed(
      state.iterations() *
      static_cast<std::int64_t>(duration * 1e12) / b.plan.rep_period_ps);
}
BENCHMARK(SimulateFourUsers)->Unit(benchmark::kMillisecond);

void GatedCoincidenceMatrix(benchmark::State& state) {
  Bench4 b;
  const double duration = 0.1;
  const auto streams =
      simulate_network(b.plan, b.source, b.detectors, b.links, duration, 7);
  for (auto _ : state) {
    auto matrix = coincidence_matrix(streams, b.plan, 100, duration);
    benchmark::DoNotOptimize(matrix);
  }
}
BENCHMARK(GatedCoincidenceMatrix)->Unit(benchmark::kMillisecond);

}  // namespace
