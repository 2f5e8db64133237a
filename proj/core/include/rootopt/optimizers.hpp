#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rootopt/coefficient_table.hpp"
#include "rootopt/matrix.hpp"
#include "rootopt/orthogonalize.hpp"
#include "rootopt/robustify.hpp"

namespace rootopt {

enum class OptimizerKind { SgdMomentum, AdamW, Muon, Root };

enum class ParamRole { Weight, Bias, Norm, Embedding, ClassToken };

/// Matrix parameters go through Muon/ROOT; everything else through AdamW.
enum class Route { Matrix, Elementwise };

struct ParamSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::optional<ParamRole> role;
};

struct ParamGroup {
  std::string name;
  Route route = Route::Matrix;
  std::vector<ParamSpec> params;
};

/// Weights with two or more dimensions take the Matrix route. Biases, norm
/// scales, embeddings and class tokens take the Elementwise route even when
/// they are 2D. Throws UnroutableParameter when a role is missing.
Route route_of(const ParamSpec& spec);

/// Groups parameters as {"matrix", "elementwise"}; empty groups are omitted.
std::vector<ParamGroup> route_params(std::span<const ParamSpec> specs);

/// A trainable tensor. Vectors are stored as 1 x n matrices; `spec.shape`
/// keeps the logical shape.
struct Parameter {
  ParamSpec spec;
  DenseMatrix value;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Muon;
  double lr = 0.02;
  double momentum = 0.95;

  // AdamW
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_eps = 1e-8;
  /// Decoupled weight decay. For Muon/ROOT this is an extension; off by default.
  double weight_decay = 0.0;

  // AdamW settings for Elementwise-route parameters under Muon/ROOT.
  double elementwise_lr = 1e-3;
  double elementwise_weight_decay = 0.0;

  // Muon / ROOT
  NsCoefficients muon_coefficients = kMuonCoefficients;
  ThresholdPolicy threshold = ThresholdPolicy::quantile(0.9);
  /// Shape-adaptive coefficients for ROOT. Null means a default-only table
  /// holding muon_coefficients.
  std::shared_ptr<const CoefficientTable> table;
  /// Orthogonalized updates are multiplied by
  ///   rms_scale * (scale_by_max_dim ? sqrt(max(rows, cols)) : 1).
  double rms_scale = 0.2;
  bool scale_by_max_dim = true;

  void validate() const;
};

double update_scale(const OptimizerConfig& config, std::size_t rows, std::size_t cols);

struct ParamState {
  DenseMatrix momentum;       // M_t; the first moment for AdamW
  DenseMatrix second_moment;  // AdamW only
  std::int64_t steps = 0;
};

struct StepReport {
  bool skipped = false;  // degenerate (zero) NS input, parameter left untouched
  double epsilon = 0.0;  // ROOT threshold used this step
  double outlier_fraction = 0.0;
  double outlier_mass_ratio = 0.0;
};

// Single-parameter update rules. `lr` is the effective learning rate for this
// step (schedule already applied). All four validate shapes and reject
// non-finite gradients, and lazily allocate the state buffers.

/// M = mu M + G; theta -= lr M.
StepReport sgdm_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param,
                     const DenseMatrix& grad, double lr);

/// Bias-corrected Adam with decoupled decay:
/// theta <- theta (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps).
StepReport adamw_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param,
                      const DenseMatrix& grad, double lr);

/// M = mu M + G; theta -= lr s NS(M) with the fixed muon_coefficients.
StepReport muon_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param,
                     const DenseMatrix& grad, double lr);

/// M = mu M + G; B = clamp(M, eps); theta -= lr s NS_adaptive(B). The outlier
/// part is discarded and the momentum buffer keeps the full M.
StepReport root_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param,
                     const DenseMatrix& grad, double lr);

/// Writes momentum snapshots to `{run_dir}/{param_name}/{step}.mtx` every
/// `stride` steps.
class MomentumCapture {
 public:
  MomentumCapture(std::filesystem::path run_dir, int stride, std::vector<std::string> only_params = {});

  bool wants(std::int64_t step, const std::string& param_name) const;
  /// Unconditional write; returns the file path.
  std::filesystem::path capture(std::int64_t step, const std::string& param_name, const DenseMatrix& momentum);

  int files_written() const { return files_written_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }

 private:
  std::filesystem::path run_dir_;
  int stride_;
  std::vector<std::string> only_params_;
  int files_written_ = 0;
};

/// Stateful multi-parameter optimizer. Muon and ROOT handle Matrix-route
/// parameters and fall back to AdamW (elementwise_lr) for the rest; SGD-M and
/// AdamW handle every parameter themselves.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::span<const ParamSpec> params);

  /// One step over every parameter. `lr_multiplier` comes from the schedule.
  std::vector<StepReport> step(std::span<Parameter> params, std::span<const DenseMatrix> grads,
                               double lr_multiplier = 1.0);

  void enable_capture(MomentumCapture capture) { capture_.emplace(std::move(capture)); }
  const std::optional<MomentumCapture>& capture() const { return capture_; }

  const OptimizerConfig& config() const { return config_; }
  const ParamState& state(std::size_t i) const { return states_.at(i); }
  Route route(std::size_t i) const { return routes_.at(i); }
  std::int64_t steps_taken() const { return steps_; }

 private:
  OptimizerConfig config_;
  OptimizerConfig elementwise_config_;
  std::vector<Route> routes_;
  std::vector<ParamState> states_;
  std::optional<MomentumCapture> capture_;
  std::int64_t steps_ = 0;
};

const char* to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

}  // namespace rootopt
