#pragma once

#include "qfuse/atwm_plan.hpp"
#include "qfuse/photon_sim.hpp"
#include "qfuse/quantum_state.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <vector>

namespace qfuse {

struct Histogram {
  std::int64_t bin_width_ps = 1;
  std::int64_t origin_ps = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
  std::int64_t bin_start_ps(std::size_t k) const {
    return origin_ps + static_cast<std::int64_t>(k) * bin_width_ps;
  }
};

/// Histogram of delays t_b - t_a over all tag pairs with delay in
/// [-range, -range + n_bins * bin). Bins never split: n_bins =
/// ceil(2 * range / bin). Runs as a sorted two-pointer sweep, so the
/// cost is linear in the tags plus the pairs inside the range. Pairing a
/// stream with itself counts each tag against itself at delay zero.
Histogram cross_correlate(const TimeTagStream& a, const TimeTagStream& b,
                          std::int64_t bin_ps, std::int64_t range_ps);

class CoincidenceMatrix {
 public:
  CoincidenceMatrix(std::vector<int> users, std::int64_t window_ps,
                    double duration_s);

  const std::vector<int>& users() const { return users_; }
  std::int64_t window_ps() const { return window_ps_; }
  double duration_s() const { return duration_s_; }

  std::uint64_t at(int user_a, int user_b) const;
  void set(int user_a, int user_b, std::uint64_t count);

  /// Smallest entry over all unordered user pairs.
  std::uint64_t min_off_diagonal() const;

 private:
  int index_of(int user) const;

  std::vector<int> users_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::int64_t window_ps_;
  double duration_s_;
};

/// 1-based pump slot whose nominal emission time is nearest to t, or 0
/// when t falls outside the slot train of its pulse (more than half a
/// slot spacing away from every slot).
int slot_index_of_time(const PumpSchedule& schedule, std::int64_t t_ps);

/// Number of tag pairs with |t_b - t_a| <= window whose tags both fall
/// in the given pump slot.
std::uint64_t gated_coincidences(const TimeTagStream& a,
                                 const TimeTagStream& b,
                                 const PumpSchedule& schedule, int slot_index,
                                 std::int64_t window_ps);

/// Entry (i, j) counts coincidences gated to slot_of_pair(i, j): both
/// tags in that slot and within the window of each other. Buckets every
/// stream by slot once, then merges per pair, so large runs stay linear
/// in the total tag count. Requires window < delta_t / 2.
CoincidenceMatrix coincidence_matrix(
    const std::map<int, TimeTagStream>& streams, const PumpSchedule& schedule,
    std::int64_t window_ps, double duration_s = 0.0);

/// Same contract as coincidence_matrix via an independent full-stream
/// sweep per pair; kept as the cross-check implementation.
CoincidenceMatrix coincidence_matrix_reference(
    const std::map<int, TimeTagStream>& streams, const PumpSchedule& schedule,
    std::int64_t window_ps, double duration_s = 0.0);

struct FringePoint {
  double angle_rad = 0.0;
  std::int64_t count = 0;
  double integration_s = 1.0;
};

struct FringeScan {
  std::vector<FringePoint> points;
};

/// Scans need at least 8 points spanning at least pi of half-wave-plate
/// angle; throws std::invalid_argument otherwise.
void validate(const FringeScan& scan);

enum class VisibilityMethod { Fit, Extrema, Dip };

struct VisibilityResult {
  double visibility = 0.0;
  double std_error = 0.0;
  VisibilityMethod method = VisibilityMethod::Fit;
};

struct UndefinedVisibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fit: least-squares c0 + cz cos(4t) + cx sin(4t) with V =
/// hypot(cz, cx) / c0 and the error propagated through Poisson count
/// variances. Extrema: (max - min)/(max + min) on the raw counts.
/// Degenerate scans (all counts equal, or no mean level) throw
/// UndefinedVisibilityError.
VisibilityResult fringe_visibility(const FringeScan& scan,
                                   VisibilityMethod method =
                                       VisibilityMethod::Fit);

/// V = 1 - r0/rt from the dip floor and the far-delay baseline, with the
/// Poisson error sqrt(r0/rt^2 + r0^2/rt^3). rt must be positive.
VisibilityResult dip_visibility(double r0, double rt);

/// F = (3v + 1)/4 for -1/3 <= v <= 1.
double fidelity_from_visibility(double v);

struct ChshResult {
  double s = 0.0;
  bool violation = false;
};

/// S = 2 sqrt(2) v for a visibility-v Werner-like state; the violation
/// flag is strict (v must exceed 1/sqrt(2)).
ChshResult chsh_s(double v);

double binary_entropy(double p);

/// Asymptotic entanglement-based key rate: QBER e = (1 - v)/2 and rate
/// = sifted * (1 - 2 h2(e)), floored at zero and cut off at e >= 11%.
double bbm92_key_rate(double v, double sifted_rate);

/// Noise-free fringe scan: count(t) = round(amplitude * R(t)) with R the
/// analytic coincidence rate of the state behind (fixed analyzer,
/// rotating half-wave plate).
FringeScan synthesize_fringe_scan(const DensityMatrix& state,
                                  const AnalyzerSetting& analyzer_a,
                                  const std::vector<double>& angles_rad,
                                  double amplitude, double integration_s = 1.0);

/// Same rates with Poisson-distributed counts from a seed-derived
/// substream.
FringeScan synthesize_fringe_scan_poisson(const DensityMatrix& state,
                                          const AnalyzerSetting& analyzer_a,
                                          const std::vector<double>& angles_rad,
                                          double amplitude,
                                          double integration_s,
                                          std::uint64_t seed);

void histogram_to_csv(std::ostream& out, const Histogram& h);
Histogram histogram_from_csv(std::istream& in);
nlohmann::ordered_json histogram_to_json(const Histogram& h);

void fringe_scan_to_csv(std::ostream& out, const FringeScan& scan);
FringeScan fringe_scan_from_csv(std::istream& in);

nlohmann::ordered_json coincidence_matrix_to_json(const CoincidenceMatrix& m);
void coincidence_matrix_to_csv(std::ostream& out, const CoincidenceMatrix& m);

}  // namespace qfuse
