#include "qfuse/atwm_plan.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace qfuse {

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

void require_complete(const PumpSchedule& s, const char* which) {
  ConnectivityReport report = verify_full_connectivity(s);
  if (!report.fully_connected())
    throw std::invalid_argument(std::string(which) +
                                " network must be fully connected before "
                                "fusion");
}

}  // namespace

PumpSchedule plan_pumps(const std::vector<int>& channel_numbers,
                        std::int64_t delta_t_ps, std::int64_t rep_period_ps,
                        const std::string& network_id) {
  const int n = static_cast<int>(channel_numbers.size());
  if (n < 2)
    throw std::invalid_argument("a network needs at least two channels");
  if (delta_t_ps <= 0) throw std::invalid_argument("delta_t_ps must be > 0");
  if (rep_period_ps <= 0)
    throw std::invalid_argument("rep_period_ps must be > 0");

  std::vector<int> sorted = channel_numbers;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("channel numbers must be distinct");
  const std::int64_t step = sorted[1] - sorted[0];
  for (int i = 1; i + 1 < n; ++i)
    if (sorted[i + 1] - sorted[i] != step)
      throw std::invalid_argument(
          "channels must be equally spaced on the grid");

  const int slot_count = 2 * n - 3;
  if (static_cast<std::int64_t>(slot_count) * delta_t_ps > rep_period_ps)
    throw InfeasibleScheduleError(
        "pump train does not fit: (2N-3)*delta_t_ps = " +
        std::to_string(slot_count * delta_t_ps) + " ps exceeds rep_period_ps = " +
        std::to_string(rep_period_ps) + " ps");

  PumpSchedule schedule;
  schedule.network_id = network_id;
  schedule.channels.reserve(n);
  for (int ch : sorted) schedule.channels.push_back(ItuChannel{ch});
  schedule.delta_t_ps = delta_t_ps;
  schedule.rep_period_ps = rep_period_ps;

  // Channel of rank r (1-based) has frequency f1 + (r-1)*step; the pair
  // (r_i, r_j) is pumped when the slot's SH frequency matches the sum,
  // which happens in slot r_i + r_j - 2, whose frequency sum is
  // 2*f1 + s*step. Slots run from rank sum 3 (slot 1) to 2N-1 (slot 2N-3).
  schedule.slots.resize(slot_count);
  const std::int64_t f1 = ItuChannel{sorted[0]}.frequency_ticks();
  for (int s = 1; s <= slot_count; ++s) {
    PumpSlot& slot = schedule.slots[s - 1];
    slot.slot_index = s;
    slot.sh_frequency_ticks = 2 * f1 + static_cast<std::int64_t>(s) * step;
    slot.time_offset_ps = static_cast<std::int64_t>(s - 1) * delta_t_ps;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int s = (i + 1) + (j + 1) - 2;
      schedule.slots[s - 1].served_pairs.emplace_back(sorted[i], sorted[j]);
    }
  return schedule;
}

int slot_of_pair(const PumpSchedule& schedule, int channel_a, int channel_b) {
  if (channel_a == channel_b) return 0;
  auto rank = [&](int ch) {
    for (int i = 0; i < schedule.user_count(); ++i)
      if (schedule.channels[i].channel_number == ch) return i + 1;
    return 0;
  };
  const int ra = rank(channel_a);
  const int rb = rank(channel_b);
  if (ra == 0 || rb == 0) return 0;
  return ra + rb - 2;
}

void TopologyGraph::add_node(const std::string& name) { nodes_.insert(name); }

void TopologyGraph::add_edge(const std::string& a, const std::string& b,
                             EdgeKind kind) {
  if (a == b) throw std::invalid_argument("self-loops are not allowed");
  nodes_.insert(a);
  nodes_.insert(b);
  edges_.emplace(a < b ? std::make_pair(a, b) : std::make_pair(b, a), kind);
}

bool TopologyGraph::has_node(const std::string& name) const {
  return nodes_.count(name) > 0;
}

bool TopologyGraph::has_edge(const std::string& a, const std::string& b) const {
  return edges_.count(a < b ? std::make_pair(a, b) : std::make_pair(b, a)) > 0;
}

std::size_t TopologyGraph::edge_count(EdgeKind kind) const {
  std::size_t n = 0;
  for (const auto& [pair, k] : edges_)
    if (k == kind) ++n;
  return n;
}

bool TopologyGraph::is_fully_connected() const {
  const std::size_t n = nodes_.size();
  return n >= 2 && edges_.size() == n * (n - 1) / 2;
}

std::string node_name(const std::string& network_id, int channel_number) {
  const std::string ch = "CH" + std::to_string(channel_number);
  return network_id.empty() ? ch : network_id + ":" + ch;
}

TopologyGraph network_topology(const PumpSchedule& schedule) {
  TopologyGraph graph;
  for (const ItuChannel& ch : schedule.channels)
    graph.add_node(node_name(schedule.network_id, ch.channel_number));
  for (const PumpSlot& slot : schedule.slots)
    for (const auto& [a, b] : slot.served_pairs)
      graph.add_edge(node_name(schedule.network_id, a),
                     node_name(schedule.network_id, b), EdgeKind::Direct);
  return graph;
}

ConnectivityReport verify_full_connectivity(const PumpSchedule& schedule) {
  ConnectivityReport report;
  report.graph = network_topology(schedule);
  for (int i = 0; i < schedule.user_count(); ++i)
    for (int j = i + 1; j < schedule.user_count(); ++j) {
      const int a = schedule.channels[i].channel_number;
      const int b = schedule.channels[j].channel_number;
      if (!report.graph.has_edge(node_name(schedule.network_id, a),
                                 node_name(schedule.network_id, b)))
        report.missing_pairs.emplace_back(a, b);
    }
  return report;
}

TopologyGraph fuse_topologies(const PumpSchedule& a, const PumpSchedule& b,
                              int sacrificed_a, int sacrificed_b) {
  require_complete(a, "first");
  require_complete(b, "second");
  auto has_channel = [](const PumpSchedule& s, int ch) {
    for (const ItuChannel& c : s.channels)
      if (c.channel_number == ch) return true;
    return false;
  };
  if (!has_channel(a, sacrificed_a))
    throw std::invalid_argument("sacrificed channel missing from first network");
  if (!has_channel(b, sacrificed_b))
    throw std::invalid_argument(
        "sacrificed channel missing from second network");

  auto survivors = [](const PumpSchedule& s, int sacrificed) {
    std::vector<int> out;
    for (const ItuChannel& ch : s.channels)
      if (ch.channel_number != sacrificed) out.push_back(ch.channel_number);
    return out;
  };
  const std::vector<int> keep_a = survivors(a, sacrificed_a);
  const std::vector<int> keep_b = survivors(b, sacrificed_b);

  TopologyGraph graph;
  for (int ch : keep_a) graph.add_node(node_name(a.network_id, ch));
  for (int ch : keep_b) graph.add_node(node_name(b.network_id, ch));
  if (graph.node_count() != keep_a.size() + keep_b.size())
    throw std::invalid_argument("fused networks must have disjoint node names");

  for (std::size_t i = 0; i < keep_a.size(); ++i)
    for (std::size_t j = i + 1; j < keep_a.size(); ++j)
      graph.add_edge(node_name(a.network_id, keep_a[i]),
                     node_name(a.network_id, keep_a[j]), EdgeKind::Direct);
  for (std::size_t i = 0; i < keep_b.size(); ++i)
    for (std::size_t j = i + 1; j < keep_b.size(); ++j)
      graph.add_edge(node_name(b.network_id, keep_b[i]),
                     node_name(b.network_id, keep_b[j]), EdgeKind::Direct);
  for (int ca : keep_a)
    for (int cb : keep_b)
      graph.add_edge(node_name(a.network_id, ca), node_name(b.network_id, cb),
                     EdgeKind::Swapped);
  return graph;
}

std::vector<AlignmentSetting> alignment_schedule(
    const std::vector<int>& idlers_a, const std::vector<int>& idlers_b) {
  if (idlers_a.empty() || idlers_a.size() != idlers_b.size())
    throw std::invalid_argument(
        "alignment needs equally many idlers on both sides");
  const int k = static_cast<int>(idlers_a.size());
  std::vector<AlignmentSetting> settings(k);
  for (int d = 1; d <= k; ++d) {
    settings[d - 1].setting_index = d;
    settings[d - 1].overlaps.reserve(k);
    for (int i = 1; i <= k; ++i) {
      const int j = (i - 1 + d - 1) % k + 1;
      settings[d - 1].overlaps.emplace_back(idlers_a[i - 1], idlers_b[j - 1]);
    }
  }
  return settings;
}

nlohmann::ordered_json schedule_to_json(const PumpSchedule& schedule) {
  nlohmann::ordered_json j;
  j["network_id"] = schedule.network_id;
  j["user_count"] = schedule.user_count();
  j["slot_count"] = schedule.slot_count();
  j["delta_t_ps"] = schedule.delta_t_ps;
  j["rep_period_ps"] = schedule.rep_period_ps;
  j["channels"] = nlohmann::ordered_json::array();
  for (const ItuChannel& ch : schedule.channels) {
    nlohmann::ordered_json c;
    c["channel"] = ch.channel_number;
    c["frequency_thz"] = ch.frequency_thz();
    c["wavelength_nm"] = round2(ch.wavelength_nm());
    j["channels"].push_back(std::move(c));
  }
  j["slots"] = nlohmann::ordered_json::array();
  for (const PumpSlot& slot : schedule.slots) {
    nlohmann::ordered_json s;
    s["slot"] = slot.slot_index;
    s["time_offset_ps"] = slot.time_offset_ps;
    s["sh_frequency_thz"] = slot.sh_frequency_thz();
    s["sh_wavelength_nm"] = round2(slot.sh_wavelength_nm());
    s["pump_wavelength_nm"] = round2(slot.telecom_pump_wavelength_nm());
    s["pairs"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : slot.served_pairs)
      s["pairs"].push_back({a, b});
    j["slots"].push_back(std::move(s));
  }
  return j;
}

nlohmann::ordered_json topology_to_json(const TopologyGraph& graph) {
  nlohmann::ordered_json j;
  j["node_count"] = graph.node_count();
  j["edge_count"] = graph.edge_count();
  j["direct_edges"] = graph.edge_count(EdgeKind::Direct);
  j["swapped_edges"] = graph.edge_count(EdgeKind::Swapped);
  j["fully_connected"] = graph.is_fully_connected();
  j["nodes"] = nlohmann::ordered_json::array();
  for (const std::string& n : graph.nodes()) j["nodes"].push_back(n);
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [pair, kind] : graph.edges()) {
    nlohmann::ordered_json e;
    e["a"] = pair.first;
    e["b"] = pair.second;
    e["kind"] = kind == EdgeKind::Direct ? "direct" : "swapped";
    j["edges"].push_back(std::move(e));
  }
  return j;
}

nlohmann::ordered_json plan_document(const PumpSchedule& schedule) {
  ConnectivityReport report = verify_full_connectivity(schedule);
  nlohmann::ordered_json j;
  j["schedule"] = schedule_to_json(schedule);
  j["topology"] = topology_to_json(report.graph);
  j["fully_connected"] = report.fully_connected();
  if (!report.fully_connected()) {
    j["missing_pairs"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : report.missing_pairs)
      j["missing_pairs"].push_back({a, b});
  }
  return j;
}

}  // namespace qfuse
