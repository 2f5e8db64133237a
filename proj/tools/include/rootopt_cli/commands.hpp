#pragma once

#include <iosfwd>

#include "rootopt_cli/config.hpp"
#include "rootopt_cli/output_dir.hpp"

namespace rootopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct CommandContext {
  const OutputDirectory& out;
  std::ostream& log;
  bool plot = false;
};

// Each command writes its artifacts into ctx.out and returns an exit code.
// Setup and numeric failures propagate as exceptions.

/// coefficients.txt + calibration_report.csv. Returns kExitNumeric when a
/// shape diverged; the rest of the table is still written.
int cmd_calibrate(const CalibrateConfig& config, const CommandContext& ctx);

/// orth_bench.csv
int cmd_bench_orth(const BenchOrthConfig& config, const CommandContext& ctx);

/// grad_stats.txt + histogram.csv + decomposition.csv
int cmd_grad_stats(const GradStatsConfig& config, const CommandContext& ctx);

/// runlog.csv + diagnostics.csv + summary.txt (+ momentum/ dumps, loss.svg)
int cmd_train(const TrainConfig& config, const CommandContext& ctx);

/// comparison.csv + summary.md
int cmd_compare(const CompareConfig& config, const CommandContext& ctx);

/// report.md over a finished run directory (+ loss.svg)
int cmd_report(const ReportConfig& config, const CommandContext& ctx);

}  // namespace rootopt::cli
