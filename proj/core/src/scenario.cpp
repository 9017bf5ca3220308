#include "qfuse/scenario.hpp"

#include "qfuse/rng.hpp"
#include "qfuse/version.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace qfuse {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("config field '" + path + "': " + what);
}

const Json& require(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing");
  return *it;
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::int64_t as_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

double number_or(const Json& j, const char* key, double fallback,
                 const std::string& path) {
  auto it = j.find(key);
  return it == j.end() ? fallback : as_number(*it, path + "." + key);
}

std::int64_t integer_or(const Json& j, const char* key, std::int64_t fallback,
                        const std::string& path) {
  auto it = j.find(key);
  return it == j.end() ? fallback : as_integer(*it, path + "." + key);
}

BellKind bell_from_name(const std::string& name, const std::string& path) {
  for (BellKind kind : kAllBellKinds)
    if (name == to_string(kind)) return kind;
  fail(path, "unknown Bell state '" + name + "'");
}

BsmOutcome outcome_from_name(const std::string& name,
                             const std::string& path) {
  if (name == "psi_minus") return BsmOutcome::PsiMinus;
  if (name == "psi_plus") return BsmOutcome::PsiPlus;
  fail(path, "outcome filter must be psi_minus or psi_plus, got '" + name +
                 "'");
}

DetectorParams detector_from_json(const Json& j, const std::string& path) {
  DetectorParams det;
  det.efficiency = number_or(j, "efficiency", det.efficiency, path);
  det.dark_rate_hz = number_or(j, "dark_rate_hz", det.dark_rate_hz, path);
  det.jitter_sigma_ps =
      number_or(j, "jitter_sigma_ps", det.jitter_sigma_ps, path);
  if (det.efficiency < 0.0 || det.efficiency > 1.0)
    fail(path + ".efficiency", "must lie in [0, 1]");
  if (det.dark_rate_hz < 0.0) fail(path + ".dark_rate_hz", "must be >= 0");
  if (det.jitter_sigma_ps < 0.0)
    fail(path + ".jitter_sigma_ps", "must be >= 0");
  return det;
}

Json detector_to_json(const DetectorParams& det) {
  Json j;
  j["efficiency"] = det.efficiency;
  j["dark_rate_hz"] = det.dark_rate_hz;
  j["jitter_sigma_ps"] = det.jitter_sigma_ps;
  return j;
}

LinkParams link_from_json(const Json& j, const std::string& path) {
  LinkParams link;
  link.transmission = number_or(j, "transmission", link.transmission, path);
  if (link.transmission < 0.0 || link.transmission > 1.0)
    fail(path + ".transmission", "must lie in [0, 1]");
  return link;
}

int channel_key(const std::string& key, const std::string& path) {
  if (key.rfind("CH", 0) != 0) fail(path, "override keys must look like CH31");
  try {
    return std::stoi(key.substr(2));
  } catch (const std::exception&) {
    fail(path, "override keys must look like CH31");
  }
}

NetworkConfig network_from_json(const Json& j, const std::string& path) {
  NetworkConfig net;
  net.id = as_string(require(j, "id", path), path + ".id");
  if (net.id.empty()) fail(path + ".id", "must not be empty");

  const Json& channels = require(j, "channels", path);
  if (!channels.is_array() || channels.size() < 2)
    fail(path + ".channels", "expected an array of at least two channels");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const std::string cpath =
        path + ".channels[" + std::to_string(i) + "]";
    const std::int64_t ch = as_integer(channels[i], cpath);
    if (ItuChannel{static_cast<int>(ch)}.frequency_ticks() <= 0)
      fail(cpath, "channel is off the frequency grid");
    net.channels.push_back(static_cast<int>(ch));
  }

  net.delta_t_ps = integer_or(j, "delta_t_ps", net.delta_t_ps, path);
  if (net.delta_t_ps <= 0) fail(path + ".delta_t_ps", "must be > 0");
  net.rep_rate_hz = number_or(j, "rep_rate_hz", net.rep_rate_hz, path);
  if (!(net.rep_rate_hz > 0.0)) fail(path + ".rep_rate_hz", "must be > 0");

  if (auto it = j.find("source"); it != j.end()) {
    net.source.mu = number_or(*it, "mu", net.source.mu, path + ".source");
    if (net.source.mu < 0.0 || net.source.mu > 0.2)
      fail(path + ".source.mu", "must lie in [0, 0.2]");
  }
  net.source.rep_rate_hz = net.rep_rate_hz;

  if (auto it = j.find("detectors"); it != j.end()) {
    if (!it->is_object()) fail(path + ".detectors", "expected an object");
    for (const auto& [key, value] : it->items()) {
      const std::string dpath = path + ".detectors." + key;
      if (key == "default")
        net.default_detector = detector_from_json(value, dpath);
      else
        net.detector_overrides[channel_key(key, dpath)] =
            detector_from_json(value, dpath);
    }
  }
  if (auto it = j.find("links"); it != j.end()) {
    if (!it->is_object()) fail(path + ".links", "expected an object");
    for (const auto& [key, value] : it->items()) {
      const std::string lpath = path + ".links." + key;
      if (key == "default")
        net.default_link = link_from_json(value, lpath);
      else
        net.link_overrides[channel_key(key, lpath)] =
            link_from_json(value, lpath);
    }
  }
  if (auto it = j.find("state"); it != j.end()) {
    const std::string spath = path + ".state";
    if (auto bell = it->find("bell"); bell != it->end())
      net.state_bell =
          bell_from_name(as_string(*bell, spath + ".bell"), spath + ".bell");
    net.state_werner_visibility = number_or(
        *it, "werner_visibility", net.state_werner_visibility, spath);
    if (net.state_werner_visibility < -1.0 / 3.0 ||
        net.state_werner_visibility > 1.0)
      fail(spath + ".werner_visibility", "must lie in [-1/3, 1]");
  }
  return net;
}

Json network_to_json(const NetworkConfig& net) {
  Json j;
  j["id"] = net.id;
  j["channels"] = net.channels;
  j["delta_t_ps"] = net.delta_t_ps;
  j["rep_rate_hz"] = net.rep_rate_hz;
  j["source"] = {{"mu", net.source.mu}};
  Json detectors;
  detectors["default"] = detector_to_json(net.default_detector);
  for (const auto& [ch, det] : net.detector_overrides)
    detectors["CH" + std::to_string(ch)] = detector_to_json(det);
  j["detectors"] = std::move(detectors);
  Json links;
  links["default"] = {{"transmission", net.default_link.transmission}};
  for (const auto& [ch, link] : net.link_overrides)
    links["CH" + std::to_string(ch)] = {{"transmission", link.transmission}};
  j["links"] = std::move(links);
  j["state"] = {{"bell", to_string(net.state_bell)},
                {"werner_visibility", net.state_werner_visibility}};
  return j;
}

FusionConfig fusion_from_json(const Json& j, const std::string& path) {
  FusionConfig fusion;
  fusion.bsm_channel = static_cast<int>(
      integer_or(j, "bsm_channel", fusion.bsm_channel, path));
  fusion.xi = number_or(j, "xi", fusion.xi, path);
  if (fusion.xi < 0.0 || fusion.xi > 1.0)
    fail(path + ".xi", "must lie in [0, 1]");

  if (auto it = j.find("xi_from_filters"); it != j.end()) {
    const std::string fpath = path + ".xi_from_filters";
    XiFilterSpec spec;
    spec.bw_bsm_nm = number_or(*it, "bw_bsm_nm", spec.bw_bsm_nm, fpath);
    spec.bw_herald_nm =
        number_or(*it, "bw_herald_nm", spec.bw_herald_nm, fpath);
    spec.timing_mismatch_ps =
        number_or(*it, "timing_mismatch_ps", spec.timing_mismatch_ps, fpath);
    spec.calibration = number_or(*it, "calibration", spec.calibration, fpath);
    if (!(spec.bw_bsm_nm > 0.0) || !(spec.bw_herald_nm > 0.0))
      fail(fpath, "filter bandwidths must be > 0");
    fusion.xi_from_filters = spec;
  }

  if (auto it = j.find("xi_overrides"); it != j.end()) {
    const std::string opath = path + ".xi_overrides";
    if (!it->is_array()) fail(opath, "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string epath = opath + "[" + std::to_string(i) + "]";
      const Json& entry = (*it)[i];
      const int a =
          static_cast<int>(as_integer(require(entry, "a", epath), epath + ".a"));
      const int b =
          static_cast<int>(as_integer(require(entry, "b", epath), epath + ".b"));
      const double xi =
          as_number(require(entry, "xi", epath), epath + ".xi");
      if (xi < 0.0 || xi > 1.0) fail(epath + ".xi", "must lie in [0, 1]");
      fusion.xi_overrides[{a, b}] = xi;
    }
  }

  if (auto it = j.find("alignment"); it != j.end()) {
    const std::string apath = path + ".alignment";
    if (it->is_string()) {
      if (as_string(*it, apath) != "auto")
        fail(apath, "expected \"auto\" or an array of settings");
      fusion.alignment_auto = true;
    } else if (it->is_array()) {
      fusion.alignment_auto = false;
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string spath = apath + "[" + std::to_string(i) + "]";
        const Json& entry = (*it)[i];
        AlignmentSetting setting;
        setting.setting_index = static_cast<int>(
            as_integer(require(entry, "setting", spath), spath + ".setting"));
        const Json& overlaps = require(entry, "overlaps", spath);
        if (!overlaps.is_array()) fail(spath + ".overlaps", "expected an array");
        for (const Json& pair : overlaps) {
          if (!pair.is_array() || pair.size() != 2)
            fail(spath + ".overlaps", "each overlap is a [a, b] pair");
          setting.overlaps.emplace_back(pair[0].get<int>(),
                                        pair[1].get<int>());
        }
        fusion.alignment_explicit.push_back(std::move(setting));
      }
    } else {
      fail(apath, "expected \"auto\" or an array of settings");
    }
  }

  if (auto it = j.find("outcome_filter"); it != j.end())
    fusion.outcome_filter = outcome_from_name(
        as_string(*it, path + ".outcome_filter"), path + ".outcome_filter");
  fusion.trials = integer_or(j, "trials", fusion.trials, path);
  if (fusion.trials < 0) fail(path + ".trials", "must be >= 0");

  if (auto it = j.find("hom"); it != j.end()) {
    const std::string hpath = path + ".hom";
    fusion.hom.max_visibility_v0 =
        number_or(*it, "max_visibility", fusion.hom.max_visibility_v0, hpath);
    fusion.hom.dip_sigma_tau_ps =
        number_or(*it, "dip_sigma_ps", fusion.hom.dip_sigma_tau_ps, hpath);
    fusion.hom.relative_delay_tau_ps =
        number_or(*it, "delay_ps", fusion.hom.relative_delay_tau_ps, hpath);
    if (fusion.hom.max_visibility_v0 < 0.0 ||
        fusion.hom.max_visibility_v0 > 1.0)
      fail(hpath + ".max_visibility", "must lie in [0, 1]");
    if (!(fusion.hom.dip_sigma_tau_ps > 0.0))
      fail(hpath + ".dip_sigma_ps", "must be > 0");
  }
  return fusion;
}

Json fusion_to_json(const FusionConfig& fusion) {
  Json j;
  j["bsm_channel"] = fusion.bsm_channel;
  j["xi"] = fusion.xi;
  if (fusion.xi_from_filters) {
    const XiFilterSpec& spec = *fusion.xi_from_filters;
    j["xi_from_filters"] = {{"bw_bsm_nm", spec.bw_bsm_nm},
                            {"bw_herald_nm", spec.bw_herald_nm},
                            {"timing_mismatch_ps", spec.timing_mismatch_ps},
                            {"calibration", spec.calibration}};
  }
  if (!fusion.xi_overrides.empty()) {
    Json overrides = Json::array();
    for (const auto& [pair, xi] : fusion.xi_overrides)
      overrides.push_back(
          {{"a", pair.first}, {"b", pair.second}, {"xi", xi}});
    j["xi_overrides"] = std::move(overrides);
  }
  if (fusion.alignment_auto) {
    j["alignment"] = "auto";
  } else {
    Json settings = Json::array();
    for (const AlignmentSetting& setting : fusion.alignment_explicit) {
      Json s;
      s["setting"] = setting.setting_index;
      s["overlaps"] = Json::array();
      for (const auto& [a, b] : setting.overlaps)
        s["overlaps"].push_back({a, b});
      settings.push_back(std::move(s));
    }
    j["alignment"] = std::move(settings);
  }
  j["outcome_filter"] = to_string(fusion.outcome_filter);
  j["trials"] = fusion.trials;
  j["hom"] = {{"max_visibility", fusion.hom.max_visibility_v0},
              {"dip_sigma_ps", fusion.hom.dip_sigma_tau_ps},
              {"delay_ps", fusion.hom.relative_delay_tau_ps}};
  return j;
}

}  // namespace

DetectorParams NetworkConfig::detector_for(int channel) const {
  auto it = detector_overrides.find(channel);
  return it == detector_overrides.end() ? default_detector : it->second;
}

LinkParams NetworkConfig::link_for(int channel) const {
  auto it = link_overrides.find(channel);
  return it == link_overrides.end() ? default_link : it->second;
}

std::int64_t NetworkConfig::rep_period_ps() const {
  return std::llround(1e12 / rep_rate_hz);
}

std::map<int, DetectorParams> NetworkConfig::detectors_by_channel() const {
  std::map<int, DetectorParams> out;
  for (int ch : channels) out[ch] = detector_for(ch);
  return out;
}

std::map<int, LinkParams> NetworkConfig::links_by_channel() const {
  std::map<int, LinkParams> out;
  for (int ch : channels) out[ch] = link_for(ch);
  return out;
}

double FusionConfig::resolved_xi() const {
  if (!xi_from_filters) return xi;
  const XiFilterSpec& spec = *xi_from_filters;
  return mode_overlap_from_filters(spec.bw_bsm_nm, spec.bw_herald_nm,
                                   spec.timing_mismatch_ps, spec.calibration);
}

const NetworkConfig& ScenarioConfig::network(const std::string& id) const {
  for (const NetworkConfig& net : networks)
    if (net.id == id) return net;
  throw ValidationError("no network with id '" + id + "'");
}

ScenarioConfig scenario_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ValidationError("config root must be an object");
  ScenarioConfig config;
  config.format_version = static_cast<int>(
      integer_or(j, "format_version", config.format_version, "config"));
  if (config.format_version != 1)
    throw ValidationError(
        "unsupported format_version " + std::to_string(config.format_version) +
        "; this tool reads version 1");

  const Json& networks = require(j, "networks", "config");
  if (!networks.is_array() || networks.empty())
    fail("config.networks", "expected a non-empty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < networks.size(); ++i) {
    NetworkConfig net = network_from_json(
        networks[i], "config.networks[" + std::to_string(i) + "]");
    if (!ids.insert(net.id).second)
      fail("config.networks[" + std::to_string(i) + "].id",
           "duplicate network id '" + net.id + "'");
    config.networks.push_back(std::move(net));
  }

  if (auto it = j.find("fusion"); it != j.end()) {
    config.fusion = fusion_from_json(*it, "config.fusion");
    for (std::size_t i = 0; i < config.networks.size(); ++i) {
      const NetworkConfig& net = config.networks[i];
      const long present = std::count(net.channels.begin(), net.channels.end(),
                                      config.fusion->bsm_channel);
      if (present != 1)
        fail("config.networks[" + std::to_string(i) + "].channels",
             "fusion needs the swap channel CH" +
                 std::to_string(config.fusion->bsm_channel) +
                 " exactly once per network");
    }
  }

  if (auto it = j.find("run"); it != j.end()) {
    const std::string rpath = "config.run";
    config.run.duration_s =
        number_or(*it, "duration_s", config.run.duration_s, rpath);
    if (config.run.duration_s < 0.0)
      fail(rpath + ".duration_s", "must be >= 0");
    const std::int64_t seed = integer_or(
        *it, "seed", static_cast<std::int64_t>(config.run.seed), rpath);
    if (seed < 0) fail(rpath + ".seed", "must be >= 0");
    config.run.seed = static_cast<std::uint64_t>(seed);
    if (auto outputs = it->find("outputs"); outputs != it->end()) {
      if (!outputs->is_array()) fail(rpath + ".outputs", "expected an array");
      for (const Json& entry : *outputs)
        config.run.outputs.push_back(
            as_string(entry, rpath + ".outputs[]"));
    }
  }
  return config;
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& config) {
  Json j;
  j["format_version"] = config.format_version;
  j["networks"] = Json::array();
  for (const NetworkConfig& net : config.networks)
    j["networks"].push_back(network_to_json(net));
  if (config.fusion) j["fusion"] = fusion_to_json(*config.fusion);
  Json run;
  run["duration_s"] = config.run.duration_s;
  run["seed"] = config.run.seed;
  run["outputs"] = config.run.outputs;
  j["run"] = std::move(run);
  return j;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config file '" + path +
                          "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

std::string config_hash_hex(const ScenarioConfig& config) {
  const std::string canonical = scenario_to_json(config).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return std::string(buf);
}

std::string file_fnv1a_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  std::uint64_t h = 1469598103934665603ULL;
  char chunk[1 << 16];
  while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(chunk[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest) {
  Json j;
  j["config_hash"] = manifest.config_hash;
  j["seed"] = manifest.seed;
  j["tool_version"] = manifest.tool_version;
  j["outputs"] = Json::array();
  for (const ManifestEntry& entry : manifest.outputs)
    j["outputs"].push_back({{"path", entry.path},
                            {"size", entry.size},
                            {"fnv1a", entry.fnv1a_hex}});
  return j;
}

RunManifest manifest_from_json(const nlohmann::ordered_json& j) {
  RunManifest manifest;
  manifest.config_hash =
      as_string(require(j, "config_hash", "manifest"), "manifest.config_hash");
  manifest.seed = static_cast<std::uint64_t>(
      as_integer(require(j, "seed", "manifest"), "manifest.seed"));
  manifest.tool_version = as_string(require(j, "tool_version", "manifest"),
                                    "manifest.tool_version");
  const Json& outputs = require(j, "outputs", "manifest");
  if (!outputs.is_array()) fail("manifest.outputs", "expected an array");
  for (const Json& entry : outputs) {
    ManifestEntry e;
    e.path = as_string(require(entry, "path", "manifest.outputs[]"),
                       "manifest.outputs[].path");
    e.size = static_cast<std::uint64_t>(
        as_integer(require(entry, "size", "manifest.outputs[]"),
                   "manifest.outputs[].size"));
    e.fnv1a_hex = as_string(require(entry, "fnv1a", "manifest.outputs[]"),
                            "manifest.outputs[].fnv1a");
    manifest.outputs.push_back(std::move(e));
  }
  return manifest;
}

PumpSchedule plan_from_config(const NetworkConfig& network) {
  return plan_pumps(network.channels, network.delta_t_ps,
                    network.rep_period_ps(), network.id);
}

std::map<int, DensityMatrix> states_from_config(const NetworkConfig& network,
                                                int bsm_channel) {
  std::map<int, DensityMatrix> states;
  for (int ch : network.channels) {
    if (ch == bsm_channel) continue;
    states.emplace(ch, werner_state(network.state_bell,
                                    network.state_werner_visibility));
  }
  return states;
}

SwapConfig swap_config_from(const FusionConfig& fusion) {
  SwapConfig config;
  config.mode_overlap_xi = fusion.resolved_xi();
  config.outcome_filter = fusion.outcome_filter;
  config.trials = fusion.trials;
  config.xi_overrides = fusion.xi_overrides;
  return config;
}

}  // namespace qfuse
