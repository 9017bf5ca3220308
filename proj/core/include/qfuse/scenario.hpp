#pragma once

#include "qfuse/atwm_plan.hpp"
#include "qfuse/photon_sim.hpp"
#include "qfuse/quantum_state.hpp"
#include "qfuse/swap_engine.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qfuse {

/// Config content that fails schema or semantic checks; the message
/// names the offending field.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem trouble (missing file, unwritable directory).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NetworkConfig {
  std::string id;
  std::vector<int> channels;
  std::int64_t delta_t_ps = 300;
  double rep_rate_hz = 60e6;
  SourceParams source;
  DetectorParams default_detector;
  std::map<int, DetectorParams> detector_overrides;
  LinkParams default_link;
  std::map<int, LinkParams> link_overrides;
  /// Entangled state each pair process emits, as a Werner mixture.
  BellKind state_bell = BellKind::PhiPlus;
  double state_werner_visibility = 1.0;

  DetectorParams detector_for(int channel) const;
  LinkParams link_for(int channel) const;
  std::int64_t rep_period_ps() const;
  std::map<int, DetectorParams> detectors_by_channel() const;
  std::map<int, LinkParams> links_by_channel() const;
};

/// Derives the mode overlap from filter bandwidths instead of a literal
/// xi value.
struct XiFilterSpec {
  double bw_bsm_nm = 0.1;
  double bw_herald_nm = 0.1;
  double timing_mismatch_ps = 0.0;
  double calibration = 1.0;
};

struct FusionConfig {
  int bsm_channel = 31;
  double xi = 1.0;
  std::optional<XiFilterSpec> xi_from_filters;
  std::map<std::pair<int, int>, double> xi_overrides;
  bool alignment_auto = true;
  std::vector<AlignmentSetting> alignment_explicit;
  BsmOutcome outcome_filter = BsmOutcome::PsiMinus;
  std::int64_t trials = 10000;
  HomModel hom{0.0, 30.0, 0.0};

  /// The literal xi, unless a filter spec overrides it.
  double resolved_xi() const;
};

struct RunConfig {
  double duration_s = 1.0;
  std::uint64_t seed = 1;
  std::vector<std::string> outputs;
};

struct ScenarioConfig {
  int format_version = 1;
  std::vector<NetworkConfig> networks;
  std::optional<FusionConfig> fusion;
  RunConfig run;

  const NetworkConfig& network(const std::string& id) const;
};

ScenarioConfig scenario_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& config);

/// Reads and validates a scenario file; IoError when unreadable,
/// ValidationError when malformed.
ScenarioConfig load_scenario(const std::string& path);

/// FNV-1a over the canonical serialized form; stable across reordered
/// but semantically equal inputs.
std::string config_hash_hex(const ScenarioConfig& config);

std::string file_fnv1a_hex(const std::string& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest
  std::uint64_t size = 0;
  std::string fnv1a_hex;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::vector<ManifestEntry> outputs;
};

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::ordered_json& j);

PumpSchedule plan_from_config(const NetworkConfig& network);

/// (signal, idler) input state per surviving user; the idler side feeds
/// the swap station.
std::map<int, DensityMatrix> states_from_config(const NetworkConfig& network,
                                                int bsm_channel);

SwapConfig swap_config_from(const FusionConfig& fusion);

}  // namespace qfuse
