#pragma once

#include "qfuse/atwm_plan.hpp"
#include "qfuse/quantum_state.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qfuse {

enum class BsmDetector { H1, V1, H2, V2 };

/// Click subset of the four swap-station detectors within one
/// coincidence window.
struct DetectorPattern {
  bool h1 = false;
  bool v1 = false;
  bool h2 = false;
  bool v2 = false;

  static DetectorPattern of(std::initializer_list<BsmDetector> clicks);
  int click_count() const {
    return static_cast<int>(h1) + static_cast<int>(v1) + static_cast<int>(h2) +
           static_cast<int>(v2);
  }
  bool operator==(const DetectorPattern&) const = default;
};

enum class BsmOutcome { PsiMinus, PsiPlus, Inconclusive };

const char* to_string(BsmOutcome outcome);

/// {H1,V2} or {V1,H2} herald |psi->; {H1,V1} or {H2,V2} herald |psi+>;
/// every other subset is inconclusive.
BsmOutcome classify_pattern(const DetectorPattern& pattern);

/// Projects the idler qubits of two (signal, idler) pairs onto the Bell
/// state heralded by `outcome` and returns (branch probability,
/// swapped signal-signal state). Mode overlap xi < 1 replaces the
/// interfering fraction's coherences with computational-basis dephasing:
/// rho = xi * rho_ideal + (1 - xi) * diag(rho_ideal), so the D/A fringe
/// visibility of the output scales as xi while H/V correlations stay
/// intact.
std::pair<double, DensityMatrix> swapped_state(const DensityMatrix& rho_a,
                                               const DensityMatrix& rho_b,
                                               BsmOutcome outcome, double xi);

/// Fringe visibility of the coincidence rate between a fixed analyzer on
/// qubit 0 and a rotating half-wave-plate analyzer on qubit 1, evaluated
/// analytically from the state. Throws std::domain_error when the mean
/// coincidence level vanishes.
double fringe_visibility_analytic(const DensityMatrix& state,
                                  const AnalyzerSetting& analyzer_a);

struct SwapConfig {
  double mode_overlap_xi = 1.0;
  BsmOutcome outcome_filter = BsmOutcome::PsiMinus;
  /// Synthetic heralding trials per cross pair used to report integer
  /// outcome statistics.
  std::int64_t trials = 10000;
  /// Per-pair overrides of the global xi, keyed by (a_channel, b_channel).
  std::map<std::pair<int, int>, double> xi_overrides;
};

struct PairSwapRecord {
  int a_channel = 0;
  int b_channel = 0;
  int setting_index = 0;
  double p_psi_minus = 0.0;
  double p_psi_plus = 0.0;
  double p_inconclusive = 0.0;
  std::int64_t count_psi_minus = 0;
  std::int64_t count_psi_plus = 0;
  std::int64_t count_inconclusive = 0;
  double xi = 1.0;
  double visibility_hv = 0.0;
  double visibility_da = 0.0;
  double fidelity = 0.0;        // (3 * visibility_da + 1) / 4
  double state_fidelity = 0.0;  // overlap with the heralded Bell state
  DensityMatrix swapped;
};

struct FusionReport {
  std::vector<PairSwapRecord> pairs;  // sorted by (a_channel, b_channel)
  TopologyGraph fused;
  double mean_visibility_da = 0.0;
  double mean_fidelity = 0.0;
};

struct CoverageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Swaps every cross pair of the two networks' surviving users over the
/// alignment schedule. `states_a` / `states_b` give each user's
/// (signal, idler) input state keyed by the user channel; the idler is
/// the photon sent to the swap station on `bsm_channel`. Throws
/// CoverageError when the alignment schedule misses a cross pair and
/// std::invalid_argument for structural problems.
FusionReport run_fusion(const PumpSchedule& plan_a, const PumpSchedule& plan_b,
                        const std::vector<AlignmentSetting>& alignment,
                        const SwapConfig& config,
                        const std::map<int, DensityMatrix>& states_a,
                        const std::map<int, DensityMatrix>& states_b,
                        int bsm_channel = 31);

nlohmann::ordered_json fusion_report_to_json(const FusionReport& report);

}  // namespace qfuse
