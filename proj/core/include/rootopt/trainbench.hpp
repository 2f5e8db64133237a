#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rootopt/optimizers.hpp"
#include "rootopt/schedule.hpp"
#include "rootopt/tasks.hpp"

namespace rootopt {

/// Gradient corruption applied after the task computes its gradient and
/// before the optimizer sees it.
struct NoiseInjector {
  /// Per-entry probability of multiplying the entry by spike_scale.
  double spike_probability = 0.0;
  double spike_scale = 100.0;
  /// When set, every entry also receives additive Student-t(df) noise scaled
  /// by the RMS of its gradient matrix.
  std::optional<double> heavy_tail_df;
  std::uint64_t seed = 0;

  bool active() const { return spike_probability > 0.0 || heavy_tail_df.has_value(); }
  void validate() const;
};

/// Seeded stream of corruptions for one run.
class NoiseStream {
 public:
  NoiseStream(const NoiseInjector& injector, std::uint64_t run_seed);

  /// Corrupts grads in place and returns the number of spiked entries.
  std::size_t apply(std::span<DenseMatrix> grads);

 private:
  NoiseInjector injector_;
  std::mt19937_64 rng_;
};

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;       // loss at the parameters the gradient was taken at
  double grad_norm = 0.0;  // norm of the gradient handed to the optimizer
  double epsilon = 0.0;    // mean ROOT threshold over Matrix-route params
  double outlier_frac = 0.0;
  std::size_t spiked = 0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RunSummary {
  double final_loss = 0.0;
  bool diverged = false;
  std::int64_t steps_completed = 0;
  std::vector<std::int64_t> spike_steps;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

/// Per-step diagnostics for one ROOT parameter.
struct ParamDiagnostic {
  std::int64_t step = 0;
  std::string param_name;
  double epsilon = 0.0;
  double outlier_fraction = 0.0;
  double outlier_mass_ratio = 0.0;

  friend bool operator==(const ParamDiagnostic&, const ParamDiagnostic&) = default;
};

/// Append-only training log with strictly increasing step indices.
class RunLog {
 public:
  void append(const StepRecord& record);
  const std::vector<StepRecord>& records() const { return records_; }

  RunSummary summary;
  std::vector<ParamDiagnostic> diagnostics;

  /// `step,loss,grad_norm,epsilon,outlier_frac,spiked`
  void write_csv(std::ostream& out) const;
  static RunLog read_csv(std::istream& in);

  /// `step,param_name,epsilon,outlier_fraction,outlier_mass_ratio`
  void write_diagnostics_csv(std::ostream& out) const;

  friend bool operator==(const RunLog&, const RunLog&) = default;

 private:
  std::vector<StepRecord> records_;
};

/// Loss values above this (or non-finite) end the run as diverged.
inline constexpr double kDivergenceLoss = 1e12;

struct ExperimentConfig {
  OptimizerConfig optimizer;
  LrSchedule schedule = LrSchedule::constant();
  std::int64_t steps = 1000;
  /// Seeds the noise stream.
  std::uint64_t seed = 0;
  std::optional<MomentumCapture> capture;
  bool record_diagnostics = false;
};

/// Runs the optimizer on the task. Divergence is recorded in the summary and
/// stops the run; it is not raised.
RunLog run_experiment(const Task& task, ExperimentConfig config, const NoiseInjector& noise);

struct NamedOptimizer {
  std::string name;
  OptimizerConfig config;
};

struct ComparisonRow {
  std::string task;
  std::string optimizer;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  bool diverged = false;

  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct OptimizerTally {
  std::string optimizer;
  double mean_final_loss = 0.0;
  int wins = 0;
  int diverged = 0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  /// Per-optimizer means and win counts in first-appearance order. A seed is
  /// won by the lowest final loss among non-diverged runs; ties go to the
  /// earlier optimizer.
  std::vector<OptimizerTally> tally() const;

  /// `task,optimizer,seed,final_loss,diverged`
  void write_csv(std::ostream& out) const;
  static ComparisonTable read_csv(std::istream& in);
};

/// Cross product of seeds x optimizers. The seed sets both the task data
/// and the noise stream; every optimizer sees the same task and noise seed.
ComparisonTable compare_optimizers(const TaskSpec& task, std::span<const NamedOptimizer> optimizers,
                                   const NoiseInjector& noise, std::span<const std::uint64_t> seeds,
                                   std::int64_t steps, const LrSchedule& schedule);

}  // namespace rootopt
