#pragma once

#include <nlohmann/json_fwd.hpp>

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qfuse {

/// Exact speed of light in nm * THz.
inline constexpr double kSpeedOfLightNmThz = 299792.458;

/// Grid frequencies are integer multiples of 100 GHz; channel n sits at
/// (1900 + n) ticks, i.e. 190.0 THz + n * 0.1 THz.
inline constexpr std::int64_t kItuAnchorTicks = 1900;

struct ItuChannel {
  int channel_number = 0;

  std::int64_t frequency_ticks() const {
    return kItuAnchorTicks + channel_number;
  }
  double frequency_thz() const { return frequency_ticks() / 10.0; }
  double wavelength_nm() const { return kSpeedOfLightNmThz / frequency_thz(); }

  auto operator<=>(const ItuChannel&) const = default;
};

/// One pump wavelength in the time-multiplexed train. Slot indices are
/// 1-based; slot s pumps every signal/idler pair whose channel
/// frequencies sum to sh_frequency_ticks.
struct PumpSlot {
  int slot_index = 0;
  std::int64_t sh_frequency_ticks = 0;
  std::int64_t time_offset_ps = 0;
  std::vector<std::pair<int, int>> served_pairs;

  double sh_frequency_thz() const { return sh_frequency_ticks / 10.0; }
  double sh_wavelength_nm() const {
    return kSpeedOfLightNmThz / sh_frequency_thz();
  }
  /// Wavelength of the telecom pump whose second harmonic drives this
  /// slot: twice the SH wavelength.
  double telecom_pump_wavelength_nm() const {
    return 2.0 * kSpeedOfLightNmThz / sh_frequency_thz();
  }
};

struct PumpSchedule {
  std::string network_id;
  std::vector<ItuChannel> channels;  // ascending
  std::int64_t delta_t_ps = 0;
  std::int64_t rep_period_ps = 0;
  std::vector<PumpSlot> slots;

  int user_count() const { return static_cast<int>(channels.size()); }
  int slot_count() const { return static_cast<int>(slots.size()); }
};

struct InfeasibleScheduleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Builds the pump train for a network of equally spaced grid channels.
/// N users need 2N - 3 slots; every unordered channel pair is served by
/// exactly one slot. Throws std::invalid_argument for malformed channel
/// sets and InfeasibleScheduleError when (2N - 3) * delta_t_ps does not
/// fit inside rep_period_ps.
PumpSchedule plan_pumps(const std::vector<int>& channel_numbers,
                        std::int64_t delta_t_ps, std::int64_t rep_period_ps,
                        const std::string& network_id = "");

/// 1-based slot that serves the pair (a, b), or 0 if no slot does.
int slot_of_pair(const PumpSchedule& schedule, int channel_a, int channel_b);

enum class EdgeKind { Direct, Swapped };

/// Undirected simple graph over named nodes; each edge remembers whether
/// it came from a shared pump slot or from a swap.
class TopologyGraph {
 public:
  void add_node(const std::string& name);
  void add_edge(const std::string& a, const std::string& b, EdgeKind kind);

  bool has_node(const std::string& name) const;
  bool has_edge(const std::string& a, const std::string& b) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t edge_count(EdgeKind kind) const;
  bool is_fully_connected() const;

  const std::set<std::string>& nodes() const { return nodes_; }
  const std::map<std::pair<std::string, std::string>, EdgeKind>& edges() const {
    return edges_;
  }

 private:
  std::set<std::string> nodes_;
  std::map<std::pair<std::string, std::string>, EdgeKind> edges_;
};

/// "CH31" for an anonymous network, "A:CH31" when the network is named.
std::string node_name(const std::string& network_id, int channel_number);

/// Graph of one network on its own: every user pair that shares a pump
/// slot gets a Direct edge.
TopologyGraph network_topology(const PumpSchedule& schedule);

struct ConnectivityReport {
  TopologyGraph graph;
  std::vector<std::pair<int, int>> missing_pairs;

  bool fully_connected() const { return missing_pairs.empty(); }
};

ConnectivityReport verify_full_connectivity(const PumpSchedule& schedule);

/// Joins two fully connected networks after each sacrifices one user to
/// the swap station. Every cross pair (a in A, b in B) of the surviving
/// users gains a Swapped edge. Both inputs must be complete, their node
/// names disjoint, and the sacrificed channels present.
TopologyGraph fuse_topologies(const PumpSchedule& a, const PumpSchedule& b,
                              int sacrificed_a, int sacrificed_b);

/// One measurement configuration of the swap station: which idler pairs
/// interfere simultaneously.
struct AlignmentSetting {
  int setting_index = 0;  // 1-based
  std::vector<std::pair<int, int>> overlaps;
};

/// Cyclic delay schedule covering all |idlers_a| x |idlers_b| cross pairs
/// in |idlers_a| settings, each pair exactly once. Setting d overlaps
/// idler i of A with idler (i + d - 2) mod K + 1 of B (1-based).
std::vector<AlignmentSetting> alignment_schedule(
    const std::vector<int>& idlers_a, const std::vector<int>& idlers_b);

nlohmann::ordered_json schedule_to_json(const PumpSchedule& schedule);
nlohmann::ordered_json topology_to_json(const TopologyGraph& graph);

/// Full plan document: schedule, connectivity and per-slot pump table.
nlohmann::ordered_json plan_document(const PumpSchedule& schedule);

}  // namespace qfuse
