#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rootopt/matrix.hpp"
#include "rootopt/optimizers.hpp"

namespace rootopt {

// Desk-scale objectives. Every task exposes exact gradients (closed form or
// hand-written backprop); make_task() checks them against central finite
// differences before returning.

/// min_W ||A W - B||_F^2 with A (samples x input_dim) scaled by 1/sqrt(samples)
/// and B = A W* + noise.
struct MatrixRegressionOptions {
  std::size_t samples = 256;
  std::size_t input_dim = 64;
  std::size_t output_dim = 32;
  double noise = 0.1;
};

/// min_{U,V} ||U V^T - C||_F^2, C = low-rank + noise.
struct FactorizationOptions {
  std::size_t rows = 64;
  std::size_t cols = 48;
  std::size_t rank = 8;
  double noise = 0.1;
  double init_scale = 0.1;
};

/// Two-layer tanh MLP with softmax cross-entropy on Gaussian clusters.
struct MlpOptions {
  std::size_t samples = 128;
  std::size_t input_dim = 16;
  std::size_t hidden = 32;
  std::size_t classes = 4;
};

/// Single-head causal self-attention block with a residual connection,
/// trained for next-token prediction on a seeded Markov character stream.
struct AttentionLmOptions {
  std::size_t vocab = 8;
  std::size_t embed = 16;
  std::size_t context = 8;
  std::size_t sequences = 16;
};

using TaskOptions = std::variant<MatrixRegressionOptions, FactorizationOptions, MlpOptions, AttentionLmOptions>;

struct TaskSpec {
  TaskOptions options = MatrixRegressionOptions{};
  std::uint64_t seed = 0;
};

/// Largest task dimension accepted.
inline constexpr std::size_t kMaxTaskDim = 1024;

class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual std::vector<Parameter> initial_parameters() const = 0;
  virtual double loss(std::span<const Parameter> params) const = 0;
  /// Gradients in parameter order, same shapes as the parameter values.
  virtual std::vector<DenseMatrix> gradients(std::span<const Parameter> params) const = 0;
};

std::string task_kind_name(const TaskOptions& options);

/// Builds a task and runs check_gradients() on it (throws GradientCheckFailed).
std::unique_ptr<Task> make_task(const TaskSpec& spec, bool verify_gradients = true);

struct GradientCheckResult {
  double worst_relative_error = 0.0;
  int points = 0;
};

/// Compares gradients() against central differences at `points` random
/// perturbations of the initial parameters. The error at each point is
/// ||fd - analytic|| / max(||analytic||, 1e-12) over a random coordinate
/// subset. Throws GradientCheckFailed above `tolerance`.
GradientCheckResult check_gradients(const Task& task, std::uint64_t seed, int points = 10,
                                    double tolerance = 1e-4);

/// Lipschitz constant of the MatrixRegression gradient, 2 * lambda_max(A^T A).
/// Throws InvalidArgument for other tasks.
double regression_smoothness(const Task& task);

}  // namespace rootopt
