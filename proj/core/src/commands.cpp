#include "qfuse/commands.hpp"

#include "qfuse/analysis.hpp"
#include "qfuse/rng.hpp"
#include "qfuse/scenario.hpp"
#include "qfuse/swap_engine.hpp"
#include "qfuse/version.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

namespace qfuse {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

int guard(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const InfeasibleScheduleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

std::string sanitize(const std::string& id) {
  std::string out;
  for (char c : id)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

std::string stream_filename(const std::string& network_id, int channel) {
  return "streams_" + sanitize(network_id) + "_CH" + std::to_string(channel) +
         ".csv";
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory '" + dir +
                  "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("file '" + path.string() +
                          "' is not valid JSON: " + e.what());
  }
  return j;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

ScenarioConfig load_config(const CommandOptions& options) {
  if (options.config_path.empty())
    throw ValidationError("a --config file is required");
  ScenarioConfig config = load_scenario(options.config_path);
  if (options.seed) config.run.seed = *options.seed;
  return config;
}

std::pair<std::map<int, TimeTagStream>, TagFileMeta> read_network_streams(
    const NetworkConfig& network, const std::string& dir) {
  std::map<int, TimeTagStream> streams;
  TagFileMeta meta;
  bool have_meta = false;
  for (int ch : network.channels) {
    const fs::path path = fs::path(dir) / stream_filename(network.id, ch);
    std::ifstream in(path);
    if (!in)
      throw IoError("cannot open tag stream '" + path.string() +
                    "'; run simulate first");
    auto [read, file_meta] = read_tag_streams_csv(in);
    if (!have_meta) {
      meta = file_meta;
      have_meta = true;
    }
    for (auto& [user, stream] : read) streams[user] = std::move(stream);
    if (!streams.count(ch))
      streams[ch] = TimeTagStream{node_name(network.id, ch), {}};
  }
  return {std::move(streams), meta};
}

struct FusionRun {
  PumpSchedule plan_a;
  PumpSchedule plan_b;
  FusionReport report;
};

FusionRun build_fusion_report(const ScenarioConfig& config) {
  if (!config.fusion)
    throw ValidationError("this command needs a 'fusion' config section");
  if (config.networks.size() != 2)
    throw ValidationError("fusion needs exactly two networks, got " +
                          std::to_string(config.networks.size()));
  const FusionConfig& fusion = *config.fusion;
  FusionRun run{plan_from_config(config.networks[0]),
                plan_from_config(config.networks[1]),
                {}};

  auto survivors = [&](const PumpSchedule& plan) {
    std::vector<int> out;
    for (const ItuChannel& ch : plan.channels)
      if (ch.channel_number != fusion.bsm_channel)
        out.push_back(ch.channel_number);
    return out;
  };
  const std::vector<AlignmentSetting> alignment =
      fusion.alignment_auto
          ? alignment_schedule(survivors(run.plan_a), survivors(run.plan_b))
          : fusion.alignment_explicit;

  run.report = run_fusion(
      run.plan_a, run.plan_b, alignment, swap_config_from(fusion),
      states_from_config(config.networks[0], fusion.bsm_channel),
      states_from_config(config.networks[1], fusion.bsm_channel),
      fusion.bsm_channel);
  return run;
}

std::vector<double> default_fringe_angles() {
  std::vector<double> angles;
  for (int k = 0; k < 16; ++k)
    angles.push_back(k * std::numbers::pi / 8.0);
  return angles;
}

Json visibility_to_json(const VisibilityResult& result) {
  Json j;
  j["visibility"] = result.visibility;
  j["std_error"] = result.std_error;
  switch (result.method) {
    case VisibilityMethod::Fit:
      j["method"] = "fit";
      break;
    case VisibilityMethod::Extrema:
      j["method"] = "extrema";
      break;
    case VisibilityMethod::Dip:
      j["method"] = "dip";
      break;
  }
  return j;
}

void analyze_matrix(const ScenarioConfig& config,
                    const CommandOptions& options, const std::string& sdir) {
  for (const NetworkConfig& net : config.networks) {
    const PumpSchedule schedule = plan_from_config(net);
    auto [streams, meta] = read_network_streams(net, sdir);
    const CoincidenceMatrix matrix = coincidence_matrix(
        streams, schedule, options.window_ps, meta.duration_s);
    const std::string base = "matrix_" + sanitize(net.id);
    if (options.format == "csv") {
      std::ostringstream out;
      coincidence_matrix_to_csv(out, matrix);
      const fs::path path = fs::path(options.out_dir) / (base + ".csv");
      write_text(path, out.str());
      std::cout << "wrote " << path.string() << "\n";
    } else {
      write_json(fs::path(options.out_dir) / (base + ".json"),
                 coincidence_matrix_to_json(matrix));
    }
  }
}

void analyze_xcorr(const ScenarioConfig& config, const CommandOptions& options,
                   const std::string& sdir) {
  for (const NetworkConfig& net : config.networks) {
    const PumpSchedule schedule = plan_from_config(net);
    auto [streams, meta] = read_network_streams(net, sdir);
    const int reference = schedule.channels.front().channel_number;
    const std::int64_t range =
        options.range_ps > 0 ? options.range_ps : schedule.rep_period_ps;
    for (const ItuChannel& ch : schedule.channels) {
      if (ch.channel_number == reference) continue;
      const Histogram h =
          cross_correlate(streams.at(reference), streams.at(ch.channel_number),
                          options.bin_ps, range);
      const std::string base = "xcorr_" + sanitize(net.id) + "_CH" +
                               std::to_string(ch.channel_number);
      if (options.format == "csv") {
        std::ostringstream out;
        histogram_to_csv(out, h);
        const fs::path path = fs::path(options.out_dir) / (base + ".csv");
        write_text(path, out.str());
        std::cout << "wrote " << path.string() << "\n";
      } else {
        write_json(fs::path(options.out_dir) / (base + ".json"),
                   histogram_to_json(h));
      }
    }
  }
}

void analyze_fringes(const ScenarioConfig& config,
                     const CommandOptions& options) {
  const std::vector<double> angles = default_fringe_angles();
  for (const NetworkConfig& net : config.networks) {
    const DensityMatrix state =
        werner_state(net.state_bell, net.state_werner_visibility);
    Json summary;
    summary["network_id"] = net.id;
    for (const auto& [basis, hwp] :
         {std::pair<const char*, double>{"hv", 0.0},
          std::pair<const char*, double>{"da", std::numbers::pi / 8.0}}) {
      const AnalyzerSetting analyzer(hwp, 0.0);
      const FringeScan scan = synthesize_fringe_scan(
          state, analyzer, angles, options.fringe_amplitude);
      std::ostringstream csv;
      fringe_scan_to_csv(csv, scan);
      const fs::path path =
          fs::path(options.out_dir) /
          ("fringes_" + sanitize(net.id) + "_" + basis + ".csv");
      write_text(path, csv.str());
      std::cout << "wrote " << path.string() << "\n";

      Json b;
      b["analytic_visibility"] = fringe_visibility_analytic(state, analyzer);
      b["fit"] = visibility_to_json(
          fringe_visibility(scan, VisibilityMethod::Fit));
      b["extrema"] = visibility_to_json(
          fringe_visibility(scan, VisibilityMethod::Extrema));
      summary[basis] = std::move(b);
    }
    write_json(fs::path(options.out_dir) /
                   ("fringes_" + sanitize(net.id) + ".json"),
               summary);
  }
}

void analyze_hom(const ScenarioConfig& config, const CommandOptions& options) {
  if (!config.fusion)
    throw ValidationError(
        "hom analysis needs a 'fusion' section with a hom model");
  const HomModel& model = config.fusion->hom;
  std::vector<double> delays;
  for (int k = -20; k <= 20; ++k)
    delays.push_back(model.relative_delay_tau_ps +
                     k * model.dip_sigma_tau_ps / 4.0);
  const std::vector<double> curve = hom_coincidence_curve(model, delays);

  std::ostringstream csv;
  csv << "delay_ps,relative_rate\n";
  for (std::size_t i = 0; i < delays.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof(line), "%.6f,%.12f", delays[i], curve[i]);
    csv << line << "\n";
  }
  const fs::path curve_path = fs::path(options.out_dir) / "hom_curve.csv";
  write_text(curve_path, csv.str());
  std::cout << "wrote " << curve_path.string() << "\n";

  const double r0 = curve[delays.size() / 2];  // the exact dip center
  Json summary;
  summary["model_visibility"] = model.max_visibility_v0;
  summary["dip_sigma_ps"] = model.dip_sigma_tau_ps;
  summary["delay_ps"] = model.relative_delay_tau_ps;
  summary["recovered"] = visibility_to_json(dip_visibility(r0, 1.0));
  write_json(fs::path(options.out_dir) / "hom.json", summary);
}

void write_swap_tables(const FusionReport& report,
                       const CommandOptions& options) {
  std::vector<int> as;
  std::vector<int> bs;
  for (const PairSwapRecord& rec : report.pairs) {
    if (as.empty() || as.back() != rec.a_channel) as.push_back(rec.a_channel);
    if (std::find(bs.begin(), bs.end(), rec.b_channel) == bs.end())
      bs.push_back(rec.b_channel);
  }
  std::sort(bs.begin(), bs.end());

  auto table = [&](const char* name, auto field) {
    std::ostringstream out;
    out << "a_channel";
    for (int b : bs) out << ",CH" << b;
    out << "\n";
    for (int a : as) {
      out << "CH" << a;
      for (int b : bs) {
        for (const PairSwapRecord& rec : report.pairs)
          if (rec.a_channel == a && rec.b_channel == b) {
            char cell[32];
            std::snprintf(cell, sizeof(cell), "%.6f", field(rec));
            out << ',' << cell;
            break;
          }
      }
      out << "\n";
    }
    const fs::path path = fs::path(options.out_dir) / name;
    write_text(path, out.str());
    std::cout << "wrote " << path.string() << "\n";
  };
  table("swap_table_visibility_da.csv",
        [](const PairSwapRecord& r) { return r.visibility_da; });
  table("swap_table_fidelity.csv",
        [](const PairSwapRecord& r) { return r.fidelity; });
}

}  // namespace

int cmd_plan(const CommandOptions& options) {
  return guard([&] {
    const ScenarioConfig config = load_config(options);
    ensure_out_dir(options.out_dir);
    for (const NetworkConfig& net : config.networks) {
      const PumpSchedule schedule = plan_from_config(net);
      write_json(fs::path(options.out_dir) /
                     ("plan_" + sanitize(net.id) + ".json"),
                 plan_document(schedule));
    }
  });
}

int cmd_simulate(const CommandOptions& options) {
  return guard([&] {
    const ScenarioConfig config = load_config(options);
    ensure_out_dir(options.out_dir);
    RunManifest manifest;
    manifest.config_hash = config_hash_hex(config);
    manifest.seed = config.run.seed;
    manifest.tool_version = std::string(kVersion);

    for (const NetworkConfig& net : config.networks) {
      const PumpSchedule schedule = plan_from_config(net);
      const std::map<int, TimeTagStream> streams = simulate_network(
          schedule, net.source, net.detectors_by_channel(),
          net.links_by_channel(), config.run.duration_s, config.run.seed);
      const TagFileMeta meta{config.run.duration_s, config.run.seed,
                             manifest.config_hash};
      for (const auto& [ch, stream] : streams) {
        std::ostringstream buffer;
        write_tag_streams_csv(buffer, {{ch, stream}}, meta);
        const std::string name = stream_filename(net.id, ch);
        const std::string content = buffer.str();
        write_text(fs::path(options.out_dir) / name, content);
        std::cout << "wrote " << (fs::path(options.out_dir) / name).string()
                  << "\n";
        manifest.outputs.push_back(ManifestEntry{
            name, content.size(), hash_hex(fnv1a64(content))});
      }
    }
    // The manifest lands last, marking the run complete.
    write_json(fs::path(options.out_dir) / "manifest.json",
               manifest_to_json(manifest));
  });
}

int cmd_analyze(const CommandOptions& options) {
  return guard([&] {
    const ScenarioConfig config = load_config(options);
    ensure_out_dir(options.out_dir);
    const std::string sdir =
        options.streams_dir.empty() ? options.out_dir : options.streams_dir;
    if (options.what == "matrix") {
      analyze_matrix(config, options, sdir);
    } else if (options.what == "xcorr") {
      analyze_xcorr(config, options, sdir);
    } else if (options.what == "fringes") {
      analyze_fringes(config, options);
    } else if (options.what == "hom") {
      analyze_hom(config, options);
    } else if (options.what == "swap-report") {
      const FusionRun run = build_fusion_report(config);
      write_json(fs::path(options.out_dir) / "swap_report.json",
                 fusion_report_to_json(run.report));
      if (options.format == "csv") write_swap_tables(run.report, options);
    } else {
      throw ValidationError(
          "unknown analysis '" + options.what +
          "'; expected matrix, xcorr, fringes, hom or swap-report");
    }
  });
}

int cmd_fuse(const CommandOptions& options) {
  return guard([&] {
    const ScenarioConfig config = load_config(options);
    ensure_out_dir(options.out_dir);
    const FusionRun run = build_fusion_report(config);
    write_json(fs::path(options.out_dir) /
                   ("plan_" + sanitize(run.plan_a.network_id) + ".json"),
               plan_document(run.plan_a));
    write_json(fs::path(options.out_dir) /
                   ("plan_" + sanitize(run.plan_b.network_id) + ".json"),
               plan_document(run.plan_b));
    write_json(fs::path(options.out_dir) / "fusion_report.json",
               fusion_report_to_json(run.report));
  });
}

int cmd_report(const CommandOptions& options) {
  return guard([&] {
    const fs::path dir(options.out_dir);
    if (!fs::is_directory(dir))
      throw IoError("'" + dir.string() + "' is not a directory");
    Json report;
    report["directory"] = dir.string();
    bool found = false;

    const fs::path manifest_path = dir / "manifest.json";
    if (fs::exists(manifest_path)) {
      const RunManifest manifest = manifest_from_json(read_json(manifest_path));
      Json sim;
      sim["config_hash"] = manifest.config_hash;
      sim["seed"] = manifest.seed;
      sim["tool_version"] = manifest.tool_version;
      sim["output_count"] = manifest.outputs.size();
      bool verified = true;
      std::uint64_t bytes = 0;
      for (const ManifestEntry& entry : manifest.outputs) {
        bytes += entry.size;
        const fs::path p = dir / entry.path;
        if (!fs::exists(p) || file_fnv1a_hex(p.string()) != entry.fnv1a_hex)
          verified = false;
      }
      sim["total_bytes"] = bytes;
      sim["outputs_verified"] = verified;
      report["simulation"] = std::move(sim);
      found = true;
    }

    Json plans = Json::array();
    Json matrices = Json::array();
    for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("plan_", 0) == 0 && name.ends_with(".json")) {
        const Json plan = read_json(entry.path());
        Json p;
        p["file"] = name;
        p["network_id"] = plan.at("schedule").at("network_id");
        p["user_count"] = plan.at("schedule").at("user_count");
        p["slot_count"] = plan.at("schedule").at("slot_count");
        p["fully_connected"] = plan.at("fully_connected");
        plans.push_back(std::move(p));
        found = true;
      } else if (name.rfind("matrix_", 0) == 0 && name.ends_with(".json")) {
        const Json m = read_json(entry.path());
        Json e;
        e["file"] = name;
        e["window_ps"] = m.at("window_ps");
        e["duration_s"] = m.at("duration_s");
        e["min_off_diagonal"] = m.at("min_off_diagonal");
        matrices.push_back(std::move(e));
        found = true;
      }
    }
    if (!plans.empty()) report["plans"] = std::move(plans);
    if (!matrices.empty()) report["matrices"] = std::move(matrices);

    for (const char* name : {"fusion_report.json", "swap_report.json"}) {
      const fs::path p = dir / name;
      if (!fs::exists(p)) continue;
      const Json fused = read_json(p);
      Json f;
      f["file"] = name;
      f["pair_count"] = fused.at("pair_count");
      f["mean_visibility_da"] = fused.at("mean_visibility_da");
      f["mean_fidelity"] = fused.at("mean_fidelity");
      f["fully_connected"] =
          fused.at("fused_topology").at("fully_connected");
      report["fusion"] = std::move(f);
      found = true;
      break;
    }

    if (!found)
      throw ValidationError("nothing to report: '" + dir.string() +
                            "' holds no recognized artifacts");
    write_json(dir / "report.json", report);
  });
}

}  // namespace qfuse
