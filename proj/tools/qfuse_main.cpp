#include "qfuse/commands.hpp"
#include "qfuse/version.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <string>

namespace {

void add_config_flags(CLI::App* cmd, qfuse::CommandOptions& options,
                      std::uint64_t& seed_value) {
  cmd->add_option("--config", options.config_path, "Scenario config file")
      ->required();
  cmd->add_option("--seed", seed_value, "Override the config's run seed");
  cmd->add_option("--out", options.out_dir, "Output directory");
  cmd->add_option("--format", options.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Plans wavelength-multiplexed entanglement networks, simulates their "
      "photon streams, and fuses two networks through a Bell-state "
      "measurement"};
  app.set_version_flag("--version", std::string(qfuse::kVersion));
  app.require_subcommand(1);

  qfuse::CommandOptions options;
  std::uint64_t seed_value = 0;

  CLI::App* plan = app.add_subcommand(
      "plan", "Build the pump schedule and network topology");
  add_config_flags(plan, options, seed_value);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate detector time-tag streams plus a run manifest");
  add_config_flags(simulate, options, seed_value);

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Turn tag streams or state specs into result files");
  add_config_flags(analyze, options, seed_value);
  analyze
      ->add_option("--what", options.what,
                   "matrix, xcorr, fringes, hom or swap-report")
      ->check(
          CLI::IsMember({"matrix", "xcorr", "fringes", "hom", "swap-report"}));
  analyze->add_option("--streams", options.streams_dir,
                      "Directory holding simulated tag streams");
  analyze->add_option("--window", options.window_ps,
                      "Coincidence window in ps");
  analyze->add_option("--bin", options.bin_ps,
                      "Cross-correlation bin width in ps");
  analyze->add_option("--range", options.range_ps,
                      "Cross-correlation range in ps (0: one period)");
  analyze->add_option("--amplitude", options.fringe_amplitude,
                      "Count scale for synthesized fringes");

  CLI::App* fuse = app.add_subcommand(
      "fuse", "Swap every cross pair and report the fused network");
  add_config_flags(fuse, options, seed_value);

  CLI::App* report =
      app.add_subcommand("report", "Aggregate the artifacts in a directory");
  report->add_option("--out", options.out_dir, "Directory to aggregate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qfuse::kExitUsage;
  }

  for (CLI::App* cmd : {plan, simulate, analyze, fuse})
    if (cmd->parsed() && cmd->count("--seed")) options.seed = seed_value;

  if (plan->parsed()) return qfuse::cmd_plan(options);
  if (simulate->parsed()) return qfuse::cmd_simulate(options);
  if (analyze->parsed()) return qfuse::cmd_analyze(options);
  if (fuse->parsed()) return qfuse::cmd_fuse(options);
  if (report->parsed()) return qfuse::cmd_report(options);
  return qfuse::kExitUsage;
}
