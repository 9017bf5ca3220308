#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace qfuse {

/// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitIo = 4;

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config's run.seed
  std::string out_dir = ".";
  std::string format = "json";  // json | csv
  /// Analysis subject: matrix, xcorr, fringes, hom or swap-report.
  std::string what = "matrix";
  /// Where analyze looks for simulated tag streams; defaults to out_dir.
  std::string streams_dir;
  std::int64_t window_ps = 100;
  std::int64_t bin_ps = 100;
  /// 0 means one full repetition period.
  std::int64_t range_ps = 0;
  /// Count scale for synthesized fringe scans.
  double fringe_amplitude = 1600.0;
};

int cmd_plan(const CommandOptions& options);
int cmd_simulate(const CommandOptions& options);
int cmd_analyze(const CommandOptions& options);
int cmd_fuse(const CommandOptions& options);
int cmd_report(const CommandOptions& options);

}  // namespace qfuse
