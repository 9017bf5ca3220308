#include "qfuse/analysis.hpp"

#include "qfuse/atwm_plan.hpp"
#include "qfuse/photon_sim.hpp"
#include "qfuse/quantum_state.hpp"

#include "doctest.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

using namespace qfuse;

namespace {

const double kPi = std::acos(-1.0);

TimeTagStream stream_of(int channel, std::vector<std::int64_t> tags) {
  return {"CH" + std::to_string(channel), std::move(tags)};
}

std::vector<double> sixteen_angles() {
  std::vector<double> angles(16);
  for (int k = 0; k < 16; ++k) angles[k] = k * kPi / 8;
  return angles;
}

AnalyzerSetting diagonal_analyzer() {
  return {kPi / 8, 0.0, AnalyzerPort::TransmitH};
}

// O(n^2) delay counter used to cross-check the two-pointer sweep.
std::uint64_t naive_pairs_in_range(const std::vector<std::int64_t>& a,
                                   const std::vector<std::int64_t>& b,
                                   std::int64_t lo, std::int64_t hi) {
  std::uint64_t n = 0;
  for (std::int64_t ta : a)
    for (std::int64_t tb : b)
      if (tb - ta >= lo && tb - ta < hi) ++n;
  return n;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("cross correlation bins known delays") {
  const auto a = stream_of(31, {100, 1000});
  const auto b = stream_of(32, {130, 975, 5000});
  const Histogram h = cross_correlate(a, b, 10, 50);

  REQUIRE(h.counts.size() == 10);
  CHECK(h.origin_ps == -50);
  // Delay +30 lands in [30, 40); delay -25 lands in [-30, -20).
  CHECK(h.counts[8] == 1);
  CHECK(h.counts[2] == 1);
  CHECK(h.total() == 2);
}

TEST_CASE("self correlation counts every tag at zero delay") {
  const auto a = stream_of(31, {0, 1000, 2000, 3000});
  const Histogram h = cross_correlate(a, a, 10, 50);
  std::uint64_t zero_bin = h.counts[(0 - h.origin_ps) / 10];
  CHECK(zero_bin == 4);
  CHECK(h.total() == 4);
}

TEST_CASE("cross correlation matches a naive pair count") {
  std::mt19937_64 rng(97);
  std::uniform_int_distribution<std::int64_t> jump(1, 400);
  std::vector<std::int64_t> ta, tb;
  for (std::int64_t t = 0; ta.size() < 300; t += jump(rng)) ta.push_back(t);
  for (std::int64_t t = 7; tb.size() < 300; t += jump(rng)) tb.push_back(t);

  for (std::int64_t range : {100, 350, 1000}) {
    const Histogram h =
        cross_correlate(stream_of(1, ta), stream_of(2, tb), 30, range);
    const std::int64_t hi =
        h.origin_ps + static_cast<std::int64_t>(h.counts.size()) * 30;
    CHECK(h.total() == naive_pairs_in_range(ta, tb, -range, hi));
  }
  CHECK_THROWS_AS(cross_correlate(stream_of(1, ta), stream_of(2, tb), 0, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(cross_correlate(stream_of(1, ta), stream_of(2, tb), 10, 0),
                  std::invalid_argument);
}

TEST_CASE("slot lookup by arrival time") {
  const PumpSchedule plan = plan_pumps({31, 32, 33, 34}, 300, 16667);
  REQUIRE(plan.slot_count() == 5);

  CHECK(slot_index_of_time(plan, 0) == 1);
  CHECK(slot_index_of_time(plan, 140) == 1);
  CHECK(slot_index_of_time(plan, 310) == 2);
  CHECK(slot_index_of_time(plan, 1200 + 10) == 5);
  // Beyond the last slot's half-spacing the time belongs to no slot.
  CHECK(slot_index_of_time(plan, 1200 + 151) == 0);
  CHECK(slot_index_of_time(plan, 8000) == 0);
  // The train repeats every pulse period.
  CHECK(slot_index_of_time(plan, 3 * 16667 + 600) == 3);
  CHECK(slot_index_of_time(plan, -16667) == 1);
}

TEST_CASE("gated coincidences require same slot and tight timing") {
  const PumpSchedule plan = plan_pumps({31, 32, 33, 34}, 300, 16667);
  const auto a = stream_of(31, {0, 50, 16667, 16967});
  const auto b = stream_of(32, {30, 16707});

  // Pairs in slot 1: (0,30), (50,30), (16667,16707). The tag at 16967
  // sits in slot 2 and never matches.
  CHECK(gated_coincidences(a, b, plan, 1, 50) == 3);
  CHECK(gated_coincidences(a, b, plan, 1, 25) == 1);
  CHECK(gated_coincidences(a, b, plan, 2, 50) == 0);
  CHECK_THROWS_AS(gated_coincidences(a, b, plan, 0, 50),
                  std::invalid_argument);
  CHECK_THROWS_AS(gated_coincidences(a, b, plan, 6, 50),
                  std::invalid_argument);
}

TEST_CASE("coincidence matrix gates each pair at its own slot") {
  const PumpSchedule plan = plan_pumps({31, 32, 33, 34}, 300, 16667);
  // Slot offsets: (31,32)->0, (31,33)->300, (32,33) and (31,34)->600,
  // (32,34)->900, (33,34)->1200.
  std::map<int, TimeTagStream> streams;
  streams[31] = stream_of(31, {0, 300, 600});
  streams[32] = stream_of(32, {10, 610, 900});
  streams[33] = stream_of(33, {290, 620, 1200});
  streams[34] = stream_of(34, {601, 905, 1195});

  const CoincidenceMatrix m = coincidence_matrix(streams, plan, 40, 1.0);
  CHECK(m.at(31, 32) == 1);  // (0, 10)
  CHECK(m.at(31, 33) == 1);  // (300, 290)
  CHECK(m.at(32, 33) == 1);  // (610, 620)
  CHECK(m.at(31, 34) == 1);  // (600, 601)
  CHECK(m.at(32, 34) == 1);  // (900, 905)
  CHECK(m.at(33, 34) == 1);  // (1200, 1195)
  CHECK(m.at(32, 31) == 1);
  CHECK(m.at(31, 31) == 0);
  CHECK(m.min_off_diagonal() == 1);
  CHECK(m.window_ps() == 40);
  CHECK(m.duration_s() == 1.0);
}

TEST_CASE("fast and reference coincidence matrices agree") {
  const PumpSchedule plan = plan_pumps({31, 32, 33, 34}, 300, 16667, "A");
  const auto streams = simulate_network(
      plan, {0.02, 60e6},
      {{31, {0.9, 2000.0, 20.0}},
       {32, {0.8, 1000.0, 0.0}},
       {33, {0.7, 0.0, 35.0}},
       {34, {0.6, 500.0, 10.0}}},
      {{31, {0.9}}, {32, {0.7}}, {33, {0.8}}, {34, {1.0}}}, 0.02, 1234);

  for (std::int64_t window : {40, 100, 149}) {
    const CoincidenceMatrix fast =
        coincidence_matrix(streams, plan, window, 0.02);
    const CoincidenceMatrix ref =
        coincidence_matrix_reference(streams, plan, window, 0.02);
    for (int a : {31, 32, 33, 34})
      for (int b : {31, 32, 33, 34})
        CHECK(fast.at(a, b) == ref.at(a, b));
    CHECK(fast.min_off_diagonal() == ref.min_off_diagonal());
  }
}

TEST_CASE("coincidence matrix validates its inputs") {
  const PumpSchedule plan = plan_pumps({31, 32, 33, 34}, 300, 16667);
  std::map<int, TimeTagStream> streams;
  streams[31] = stream_of(31, {0});
  streams[32] = stream_of(32, {10});

  CHECK_NOTHROW(coincidence_matrix(streams, plan, 149, 1.0));
  // The gate must stay inside half a slot spacing.
  CHECK_THROWS_AS(coincidence_matrix(streams, plan, 150, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(coincidence_matrix(streams, plan, 0, 1.0),
                  std::invalid_argument);

  streams[99] = stream_of(99, {0});
  CHECK_THROWS_AS(coincidence_matrix(streams, plan, 100, 1.0),
                  std::invalid_argument);
}

TEST_CASE("matrix accessors reject unknown users and diagonal writes") {
  CoincidenceMatrix m({31, 32}, 100, 1.0);
  m.set(31, 32, 7);
  CHECK(m.at(32, 31) == 7);
  CHECK_THROWS_AS(m.at(31, 99), std::invalid_argument);
  CHECK_THROWS_AS(m.set(31, 31, 1), std::invalid_argument);
}

TEST_CASE("noiseless fringe scans recover the generating visibility") {
  for (double v : {1.0, 0.812, 0.798, 0.5}) {
    const DensityMatrix state = werner_state(BellKind::PhiPlus, v);
    const FringeScan scan = synthesize_fringe_scan(
        state, diagonal_analyzer(), sixteen_angles(), 4000.0);
    REQUIRE(scan.points.size() == 16);

    const VisibilityResult fit = fringe_visibility(scan, VisibilityMethod::Fit);
    CHECK(std::abs(fit.visibility - v) < 1e-9);
    CHECK(fit.method == VisibilityMethod::Fit);

    // On this grid the scan hits the fringe extrema exactly, and the
    // amplitude keeps every synthesized count an exact integer.
    const VisibilityResult ext =
        fringe_visibility(scan, VisibilityMethod::Extrema);
    CHECK(ext.visibility == v);
  }
}

TEST_CASE("poisson fringe scans recover visibility within errors") {
  const DensityMatrix state = werner_state(BellKind::PhiPlus, 0.835);
  const FringeScan scan = synthesize_fringe_scan_poisson(
      state, diagonal_analyzer(), sixteen_angles(), 1600.0, 1.0, 20250815);
  const VisibilityResult fit = fringe_visibility(scan);
  CHECK(fit.std_error > 0.0);
  CHECK(fit.std_error < 0.06);
  CHECK(std::abs(fit.visibility - 0.835) < 4 * fit.std_error);

  // A different seed gives different counts.
  const FringeScan other = synthesize_fringe_scan_poisson(
      state, diagonal_analyzer(), sixteen_angles(), 1600.0, 1.0, 20250816);
  bool any_differs = false;
  for (std::size_t i = 0; i < scan.points.size(); ++i)
    any_differs |= scan.points[i].count != other.points[i].count;
  CHECK(any_differs);
}

TEST_CASE("degenerate fringe scans are rejected") {
  FringeScan flat;
  for (int k = 0; k < 16; ++k) flat.points.push_back({k * kPi / 8, 500, 1.0});
  CHECK_THROWS_AS(fringe_visibility(flat, VisibilityMethod::Fit),
                  UndefinedVisibilityError);
  CHECK_THROWS_AS(fringe_visibility(flat, VisibilityMethod::Extrema),
                  UndefinedVisibilityError);

  FringeScan dark = flat;
  for (auto& p : dark.points) p.count = 0;
  CHECK_THROWS_AS(fringe_visibility(dark), UndefinedVisibilityError);

  FringeScan narrow;
  for (int k = 0; k < 9; ++k) narrow.points.push_back({k * kPi / 16, 100, 1.0});
  CHECK_THROWS_AS(fringe_visibility(narrow), std::invalid_argument);

  FringeScan sparse;
  for (int k = 0; k < 7; ++k) sparse.points.push_back({k * kPi / 6, 100, 1.0});
  CHECK_THROWS_AS(fringe_visibility(sparse), std::invalid_argument);

  FringeScan negative = flat;
  negative.points[3].count = -1;
  CHECK_THROWS_AS(fringe_visibility(negative), std::invalid_argument);

  CHECK_THROWS_AS(fringe_visibility(flat, VisibilityMethod::Dip),
                  std::invalid_argument);
}

TEST_CASE("dip visibility from floor and baseline") {
  const VisibilityResult v = dip_visibility(93.0, 1000.0);
  CHECK(std::abs(v.visibility - 0.907) < 1e-12);
  CHECK(v.method == VisibilityMethod::Dip);
  const double want_sigma =
      std::sqrt(93.0 / 1e6 + 93.0 * 93.0 / 1e9);
  CHECK(v.std_error == doctest::Approx(want_sigma).epsilon(1e-12));

  CHECK(dip_visibility(0.0, 500.0).visibility == 1.0);
  CHECK_THROWS_AS(dip_visibility(93.0, 0.0), UndefinedVisibilityError);
  CHECK_THROWS_AS(dip_visibility(-1.0, 100.0), std::invalid_argument);
}

TEST_CASE("visibility maps to fidelity, chsh and key rate") {
  CHECK(fidelity_from_visibility(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity_from_visibility(0.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(fidelity_from_visibility((4.0 * 0.845 - 1.0) / 3.0) - 0.845) <
        1e-12);
  CHECK_THROWS_AS(fidelity_from_visibility(1.01), std::invalid_argument);
  CHECK_THROWS_AS(fidelity_from_visibility(-0.5), std::invalid_argument);

  CHECK(chsh_s(1.0).s == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(chsh_s(1.0).violation);
  CHECK(chsh_s(0.95).s == doctest::Approx(2.687).epsilon(1e-3));
  CHECK(chsh_s(0.95).violation);
  CHECK_FALSE(chsh_s(1.0 / std::sqrt(2.0)).violation);
  CHECK_FALSE(chsh_s(0.5).violation);
  CHECK_THROWS_AS(chsh_s(1.2), std::invalid_argument);

  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.11) ==
        doctest::Approx(binary_entropy(0.89)).epsilon(1e-12));

  CHECK(bbm92_key_rate(1.0, 1000.0) == doctest::Approx(1000.0).epsilon(1e-12));
  // QBER (1 - v) / 2 sits at the 11% abort threshold for v = 0.78; in
  // doubles it lands a hair below the cutoff, so the rate is ~0 rather
  // than the hard zero that kicks in just past it.
  CHECK(bbm92_key_rate(0.78, 1000.0) < 0.2);
  CHECK(bbm92_key_rate(0.7799, 1000.0) == 0.0);
  CHECK(bbm92_key_rate(0.5, 1000.0) == 0.0);
  CHECK(bbm92_key_rate(0.95, 1000.0) ==
        doctest::Approx(662.7).epsilon(1e-3));
  CHECK(bbm92_key_rate(0.8, 1000.0) > 0.0);
  CHECK_THROWS_AS(bbm92_key_rate(0.5, -1.0), std::invalid_argument);
}

TEST_CASE("synthesized scans scale with amplitude and integration") {
  const DensityMatrix state = werner_state(BellKind::PhiPlus, 1.0);
  const FringeScan small = synthesize_fringe_scan(
      state, diagonal_analyzer(), sixteen_angles(), 1000.0);
  const FringeScan big = synthesize_fringe_scan(
      state, diagonal_analyzer(), sixteen_angles(), 2000.0);
  for (std::size_t i = 0; i < small.points.size(); ++i)
    CHECK(big.points[i].count == 2 * small.points[i].count);
  CHECK(small.points[0].integration_s == 1.0);
  CHECK_THROWS_AS(synthesize_fringe_scan(state, diagonal_analyzer(),
                                         sixteen_angles(), -1.0),
                  std::invalid_argument);
}

TEST_CASE("histogram csv round trip") {
  Histogram h;
  h.bin_width_ps = 25;
  h.origin_ps = -100;
  h.counts = {0, 3, 17, 4, 0, 1, 0, 2};

  std::stringstream buffer;
  histogram_to_csv(buffer, h);
  const Histogram back = histogram_from_csv(buffer);
  CHECK(back.bin_width_ps == h.bin_width_ps);
  CHECK(back.origin_ps == h.origin_ps);
  CHECK(back.counts == h.counts);

  SUBCASE("non-contiguous bins are rejected") {
    std::stringstream bad(
        "# bin_width_ps=10 origin_ps=0\nbin_start_ps,count\n0,1\n20,2\n");
    CHECK_THROWS_AS(histogram_from_csv(bad), std::invalid_argument);
  }
  SUBCASE("missing header is rejected") {
    std::stringstream bad("bin_start_ps,count\n0,1\n");
    CHECK_THROWS_AS(histogram_from_csv(bad), std::invalid_argument);
  }
}

TEST_CASE("fringe csv round trip preserves angles exactly") {
  const FringeScan scan = synthesize_fringe_scan(
      werner_state(BellKind::PhiPlus, 0.9), diagonal_analyzer(),
      sixteen_angles(), 1600.0, 2.5);
  std::stringstream buffer;
  fringe_scan_to_csv(buffer, scan);
  const FringeScan back = fringe_scan_from_csv(buffer);
  REQUIRE(back.points.size() == scan.points.size());
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    CHECK(back.points[i].angle_rad == scan.points[i].angle_rad);
    CHECK(back.points[i].count == scan.points[i].count);
    CHECK(back.points[i].integration_s == scan.points[i].integration_s);
  }
}

TEST_CASE("matrix serialization carries users and counts") {
  CoincidenceMatrix m({31, 32, 33}, 100, 2.0);
  m.set(31, 32, 11);
  m.set(31, 33, 5);
  m.set(32, 33, 8);

  const nlohmann::ordered_json j = coincidence_matrix_to_json(m);
  CHECK(j["users"] == std::vector<int>{31, 32, 33});
  CHECK(j["window_ps"] == 100);
  CHECK(j["min_off_diagonal"] == 5);
  CHECK(j["counts"][0][1] == 11);
  CHECK(j["counts"][1][0] == 11);
  CHECK(j["counts"][0][0] == 0);

  std::stringstream csv;
  coincidence_matrix_to_csv(csv, m);
  const std::string text = csv.str();
  CHECK(text.find("CH31") != std::string::npos);
  CHECK(text.find("11") != std::string::npos);
}

TEST_CASE("histogram json shape") {
  Histogram h;
  h.bin_width_ps = 10;
  h.origin_ps = -20;
  h.counts = {1, 2, 3, 4};
  const nlohmann::ordered_json j = histogram_to_json(h);
  CHECK(j["bin_width_ps"] == 10);
  CHECK(j["origin_ps"] == -20);
  CHECK(j["total"] == 10);
  CHECK(j["counts"].size() == 4);
}

}  // TEST_SUITE
