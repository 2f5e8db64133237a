#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rootopt/calibration.hpp"
#include "rootopt/optimizers.hpp"
#include "rootopt/schedule.hpp"
#include "rootopt/tasks.hpp"
#include "rootopt/trainbench.hpp"

namespace rootopt::cli {

using Json = nlohmann::ordered_json;

/// Bad or missing config values. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json load_json(const std::filesystem::path& path);

// Each subcommand config is parsed strictly (unknown keys are errors) and can
// be rendered back, with every default filled in, for --print-config.

struct CalibrateConfig {
  std::vector<ShapeKey> shapes;
  CalibrationConfig calibration;
  /// Files or directories holding ROOTMTX1 momentum dumps.
  std::vector<std::filesystem::path> captured;
};

struct BenchOrthConfig {
  std::vector<ShapeKey> shapes;
  int samples = 8;
  int iterations = 5;
  std::uint64_t seed = 0;
  /// Coefficient table for the adaptive strategy; fixed-only without it.
  std::optional<std::filesystem::path> table;
};

struct GradStatsConfig {
  /// Dump files or directories. Empty means a live run.
  std::vector<std::filesystem::path> dumps;
  TaskSpec task;
  NoiseInjector noise;
  int draws = 16;
  int bins = 48;
  double range_sigmas = 6.0;
  double quantile = 0.9;
  std::uint64_t seed = 0;
};

struct CaptureConfig {
  int stride = 100;
  std::vector<std::string> params;
};

struct TrainConfig {
  TaskSpec task;
  OptimizerConfig optimizer;
  std::optional<std::filesystem::path> table;
  LrSchedule schedule = LrSchedule::constant();
  std::int64_t steps = 1000;
  NoiseInjector noise;
  std::uint64_t seed = 0;
  std::optional<CaptureConfig> capture;
  bool diagnostics = true;
};

struct NamedOptimizerConfig {
  std::string name;
  OptimizerConfig config;
  std::optional<std::filesystem::path> table;
};

struct CompareConfig {
  TaskSpec task;
  std::vector<NamedOptimizerConfig> optimizers;
  NoiseInjector noise;
  std::vector<std::uint64_t> seeds;
  std::int64_t steps = 1000;
  LrSchedule schedule = LrSchedule::constant();
};

struct ReportConfig {
  std::filesystem::path source;
};

CalibrateConfig parse_calibrate(const Json& j);
BenchOrthConfig parse_bench_orth(const Json& j);
GradStatsConfig parse_grad_stats(const Json& j);
TrainConfig parse_train(const Json& j);
CompareConfig parse_compare(const Json& j);
ReportConfig parse_report(const Json& j);

Json to_json(const CalibrateConfig& c);
Json to_json(const BenchOrthConfig& c);
Json to_json(const GradStatsConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const CompareConfig& c);
Json to_json(const ReportConfig& c);

/// Replaces every seed in the config with `seed`. For compare, the seed list
/// becomes {seed}.
void override_seed(CalibrateConfig& c, std::uint64_t seed);
void override_seed(BenchOrthConfig& c, std::uint64_t seed);
void override_seed(GradStatsConfig& c, std::uint64_t seed);
void override_seed(TrainConfig& c, std::uint64_t seed);
void override_seed(CompareConfig& c, std::uint64_t seed);

}  // namespace rootopt::cli
