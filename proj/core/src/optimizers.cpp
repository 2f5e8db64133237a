#include "rootopt/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "rootopt/errors.hpp"
#include "rootopt/matrix_io.hpp"

namespace rootopt {
namespace {

void prepare(ParamState& state, const DenseMatrix& param, const DenseMatrix& grad, bool second_moment) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw ShapeMismatch(fmt::format("optimizer step: gradient {}x{} does not match parameter {}x{}", grad.rows(),
                                    grad.cols(), param.rows(), param.cols()));
  }
  if (!grad.all_finite()) throw NonFiniteGradient("optimizer step: non-finite gradient");
  if (state.momentum.empty()) state.momentum = DenseMatrix(param.rows(), param.cols());
  if (second_moment && state.second_moment.empty()) state.second_moment = DenseMatrix(param.rows(), param.cols());
  if (state.momentum.rows() != param.rows() || state.momentum.cols() != param.cols()) {
    throw ShapeMismatch("optimizer step: state buffer shape does not match parameter");
  }
}

void accumulate_momentum(const OptimizerConfig& config, ParamState& state, const DenseMatrix& grad) {
  auto& m = state.momentum.values();
  m = config.momentum * m + grad.values();
  ++state.steps;
}

// theta <- theta (1 - lr wd) - lr s O
void apply_orthogonal_update(const OptimizerConfig& config, DenseMatrix& param, const DenseMatrix& direction,
                             double lr) {
  auto& p = param.values();
  if (config.weight_decay != 0.0) p *= (1.0 - lr * config.weight_decay);
  p -= (lr * update_scale(config, param.rows(), param.cols())) * direction.values();
}

}  // namespace

Route route_of(const ParamSpec& spec) {
  if (!spec.role) throw UnroutableParameter("parameter '" + spec.name + "' has no role metadata");
  if (spec.shape.empty()) throw UnroutableParameter("parameter '" + spec.name + "' has no shape");
  if (*spec.role == ParamRole::Weight && spec.shape.size() >= 2) return Route::Matrix;
  return Route::Elementwise;
}

std::vector<ParamGroup> route_params(std::span<const ParamSpec> specs) {
  ParamGroup matrix{"matrix", Route::Matrix, {}};
  ParamGroup elementwise{"elementwise", Route::Elementwise, {}};
  for (const auto& spec : specs) {
    (route_of(spec) == Route::Matrix ? matrix : elementwise).params.push_back(spec);
  }
  std::vector<ParamGroup> groups;
  if (!matrix.params.empty()) groups.push_back(std::move(matrix));
  if (!elementwise.params.empty()) groups.push_back(std::move(elementwise));
  return groups;
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("optimizer: learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("optimizer: momentum must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("optimizer: AdamW betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("optimizer: adam_eps must be > 0");
  if (!(weight_decay >= 0.0) || !(elementwise_weight_decay >= 0.0)) {
    throw InvalidArgument("optimizer: weight decay must be >= 0");
  }
  if (!(elementwise_lr > 0.0)) throw InvalidArgument("optimizer: elementwise_lr must be > 0");
  if (!(rms_scale > 0.0)) throw InvalidArgument("optimizer: rms_scale must be > 0");
}

double update_scale(const OptimizerConfig& config, std::size_t rows, std::size_t cols) {
  const double dim = config.scale_by_max_dim ? std::sqrt(static_cast<double>(std::max(rows, cols))) : 1.0;
  return config.rms_scale * dim;
}

StepReport sgdm_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param, const DenseMatrix& grad,
                     double lr) {
  prepare(state, param, grad, false);
  accumulate_momentum(config, state, grad);
  auto& p = param.values();
  if (config.weight_decay != 0.0) p *= (1.0 - lr * config.weight_decay);
  p -= lr * state.momentum.values();
  return {};
}

StepReport adamw_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param, const DenseMatrix& grad,
                      double lr) {
  prepare(state, param, grad, true);
  ++state.steps;
  auto& m = state.momentum.values();
  auto& v = state.second_moment.values();
  const auto& g = grad.values();
  m = config.beta1 * m + (1.0 - config.beta1) * g;
  v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);

  const double t = static_cast<double>(state.steps);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);

  auto& p = param.values();
  if (config.weight_decay != 0.0) p *= (1.0 - lr * config.weight_decay);
  p.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + config.adam_eps);
  return {};
}

StepReport muon_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param, const DenseMatrix& grad,
                     double lr) {
  prepare(state, param, grad, false);
  accumulate_momentum(config, state, grad);
  StepReport report;
  try {
    const DenseMatrix direction = ns_orthogonalize(state.momentum, config.muon_coefficients);
    apply_orthogonal_update(config, param, direction, lr);
  } catch (const DegenerateInput&) {
    report.skipped = true;
  }
  return report;
}

StepReport root_step(const OptimizerConfig& config, ParamState& state, DenseMatrix& param, const DenseMatrix& grad,
                     double lr) {
  prepare(state, param, grad, false);
  accumulate_momentum(config, state, grad);

  const Decomposition parts = decompose(state.momentum, config.threshold);
  const OutlierStats stats = outlier_stats(parts, state.momentum);
  StepReport report;
  report.epsilon = stats.epsilon;
  report.outlier_fraction = stats.outlier_fraction;
  report.outlier_mass_ratio = stats.outlier_mass_ratio;

  const NsCoefficients& coeffs =
      config.table ? config.table->lookup(param.rows(), param.cols()) : config.muon_coefficients;
  try {
    const DenseMatrix direction = ns_orthogonalize(parts.base, coeffs);
    apply_orthogonal_update(config, param, direction, lr);
  } catch (const DegenerateInput&) {
    report.skipped = true;
  }
  return report;
}

MomentumCapture::MomentumCapture(std::filesystem::path run_dir, int stride, std::vector<std::string> only_params)
    : run_dir_(std::move(run_dir)), stride_(stride), only_params_(std::move(only_params)) {
  if (stride_ < 1) throw InvalidArgument("MomentumCapture: stride must be >= 1");
}

bool MomentumCapture::wants(std::int64_t step, const std::string& param_name) const {
  if (step < 1 || step % stride_ != 0) return false;
  return only_params_.empty() ||
         std::find(only_params_.begin(), only_params_.end(), param_name) != only_params_.end();
}

std::filesystem::path MomentumCapture::capture(std::int64_t step, const std::string& param_name,
                                               const DenseMatrix& momentum) {
  const auto dir = run_dir_ / param_name;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoFailure("momentum capture: cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / (std::to_string(step) + ".mtx");
  write_matrix_dump(path, momentum);
  ++files_written_;
  return path;
}

Optimizer::Optimizer(OptimizerConfig config, std::span<const ParamSpec> params) : config_(std::move(config)) {
  config_.validate();
  elementwise_config_ = config_;
  elementwise_config_.kind = OptimizerKind::AdamW;
  elementwise_config_.lr = config_.elementwise_lr;
  elementwise_config_.weight_decay = config_.elementwise_weight_decay;
  routes_.reserve(params.size());
  for (const auto& spec : params) routes_.push_back(route_of(spec));
  states_.resize(params.size());
}

std::vector<StepReport> Optimizer::step(std::span<Parameter> params, std::span<const DenseMatrix> grads,
                                        double lr_multiplier) {
  if (params.size() != states_.size() || grads.size() != states_.size()) {
    throw ShapeMismatch("Optimizer::step: parameter/gradient count does not match construction");
  }
  ++steps_;
  std::vector<StepReport> reports(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    DenseMatrix& value = params[i].value;
    const bool matrix = routes_[i] == Route::Matrix;
    switch (config_.kind) {
      case OptimizerKind::SgdMomentum:
        reports[i] = sgdm_step(config_, states_[i], value, grads[i], config_.lr * lr_multiplier);
        break;
      case OptimizerKind::AdamW:
        reports[i] = adamw_step(config_, states_[i], value, grads[i], config_.lr * lr_multiplier);
        break;
      case OptimizerKind::Muon:
      case OptimizerKind::Root:
        if (!matrix) {
          reports[i] = adamw_step(elementwise_config_, states_[i], value, grads[i],
                                  elementwise_config_.lr * lr_multiplier);
        } else if (config_.kind == OptimizerKind::Muon) {
          reports[i] = muon_step(config_, states_[i], value, grads[i], config_.lr * lr_multiplier);
        } else {
          reports[i] = root_step(config_, states_[i], value, grads[i], config_.lr * lr_multiplier);
        }
        break;
    }
    if (capture_ && matrix && capture_->wants(steps_, params[i].spec.name)) {
      capture_->capture(steps_, params[i].spec.name, states_[i].momentum);
    }
  }
  return reports;
}

const char* to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::SgdMomentum: return "sgdm";
    case OptimizerKind::AdamW: return "adamw";
    case OptimizerKind::Muon: return "muon";
    case OptimizerKind::Root: return "root";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgdm" || name == "sgd") return OptimizerKind::SgdMomentum;
  if (name == "adamw") return OptimizerKind::AdamW;
  if (name == "muon") return OptimizerKind::Muon;
  if (name == "root") return OptimizerKind::Root;
  throw InvalidArgument("unknown optimizer kind '" + name + "'");
}

}  // namespace rootopt
