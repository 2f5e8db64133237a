#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rootopt/matrix.hpp"
#include "rootopt/orthogonalize.hpp"

namespace rootopt {

enum class SampleOrigin { Captured, Synthetic };

/// Singular values of a Frobenius-normalized matrix (so sum sigma^2 = 1).
struct SpectralSample {
  ShapeKey shape;
  std::vector<double> sigmas;
  SampleOrigin origin = SampleOrigin::Synthetic;

  /// Normalizes m by its Frobenius norm and extracts its singular values.
  static SpectralSample from_matrix(const DenseMatrix& m, SampleOrigin origin);
};

/// captured_parts : synthetic_parts. (1, 3) is one captured sample per
/// three synthetic ones; (0, k) means synthetic-only calibration.
struct MixRatio {
  unsigned captured_parts = 1;
  unsigned synthetic_parts = 3;
};

struct CalibrationConfig {
  int iterations = 5;
  MixRatio mix;
  int steps = 2000;
  double step_size = 1e-2;
  NsCoefficients init = kMuonCoefficients;
  std::uint64_t seed = 0;
  /// Sample count used when there are no captured matrices to pair with.
  int synthetic_samples = 8;
};

struct CoefficientGradient {
  double d_a = 0.0;
  double d_b = 0.0;
  double d_c = 0.0;
};

/// Any |g^(k)(sigma)| above this is treated as divergence.
inline constexpr double kOverflowBound = 1e6;

/// Mean over samples of sum_i (g^(T)(sigma_i) - 1)^2 with T = coeffs.iterations.
/// Throws NumericOverflow when an intermediate iterate exceeds kOverflowBound.
double newton_loss(const NsCoefficients& coeffs, std::span<const SpectralSample> samples);

/// Exact gradient of newton_loss with respect to (a, b, c), by forward-mode
/// propagation of the partials through each composition step.
CoefficientGradient loss_gradient(const NsCoefficients& coeffs, std::span<const SpectralSample> samples);

struct CalibrationResult {
  NsCoefficients coeffs;
  double init_loss = 0.0;
  double final_loss = 0.0;
  int accepted_steps = 0;
};

/// Fits (a, b, c) for one shape by gradient descent with backtracking step
/// control, starting from config.init. The best iterate visited is returned,
/// so final_loss <= init_loss always holds. Throws AllStepsDiverged when the
/// starting point and every trial overflow.
CalibrationResult calibrate_shape(std::span<const SpectralSample> samples, const CalibrationConfig& config);

/// Builds the calibration set for one shape: captured matrices (which must
/// have that shape in either orientation) interleaved with seeded
/// standard-Gaussian matrices at config.mix.
std::vector<SpectralSample> build_sample_set(std::span<const DenseMatrix> captured, ShapeKey shape,
                                             const CalibrationConfig& config);

}  // namespace rootopt
