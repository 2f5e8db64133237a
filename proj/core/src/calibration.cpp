#include "rootopt/calibration.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

struct LossAndGradient {
  double loss = 0.0;
  CoefficientGradient grad;
};

// Runs the scalar recurrence on every sigma. The partials (d/da, d/db, d/dc)
// of the current iterate are carried alongside it: with p = g'(x) the chain
// rule gives d_next = p * d + (x, x^3, x^5).
LossAndGradient evaluate(const NsCoefficients& k, std::span<const SpectralSample> samples, bool with_gradient) {
  if (samples.empty()) throw InvalidArgument("newton_loss: empty sample set");
  LossAndGradient out;
  for (const SpectralSample& sample : samples) {
    for (double sigma : sample.sigmas) {
      double x = sigma;
      double da = 0.0;
      double db = 0.0;
      double dc = 0.0;
      for (int t = 0; t < k.iterations; ++t) {
        const double x2 = x * x;
        const double x3 = x2 * x;
        const double x5 = x3 * x2;
        if (with_gradient) {
          const double slope = k.a + 3.0 * k.b * x2 + 5.0 * k.c * x2 * x2;
          da = slope * da + x;
          db = slope * db + x3;
          dc = slope * dc + x5;
        }
        x = k.a * x + k.b * x3 + k.c * x5;
        if (!(std::abs(x) <= kOverflowBound)) {
          throw NumericOverflow("newton_loss: iterate left [-1e6, 1e6]; coefficients diverge");
        }
      }
      const double r = x - 1.0;
      out.loss += r * r;
      if (with_gradient) {
        out.grad.d_a += 2.0 * r * da;
        out.grad.d_b += 2.0 * r * db;
        out.grad.d_c += 2.0 * r * dc;
      }
    }
  }
  const double n = static_cast<double>(samples.size());
  out.loss /= n;
  out.grad.d_a /= n;
  out.grad.d_b /= n;
  out.grad.d_c /= n;
  return out;
}

}  // namespace

SpectralSample SpectralSample::from_matrix(const DenseMatrix& m, SampleOrigin origin) {
  const double norm = frobenius_norm(m);
  if (!(norm > kDegenerateNorm)) throw DegenerateInput("SpectralSample: zero matrix");
  DenseMatrix normalized(RowMajorMatrix(m.values() / norm));
  SpectralSample s;
  s.shape = ShapeKey::of(m);
  s.sigmas = singular_values(normalized);
  s.origin = origin;
  return s;
}

double newton_loss(const NsCoefficients& coeffs, std::span<const SpectralSample> samples) {
  return evaluate(coeffs, samples, false).loss;
}

CoefficientGradient loss_gradient(const NsCoefficients& coeffs, std::span<const SpectralSample> samples) {
  return evaluate(coeffs, samples, true).grad;
}

CalibrationResult calibrate_shape(std::span<const SpectralSample> samples, const CalibrationConfig& config) {
  if (samples.empty()) throw InvalidArgument("calibrate_shape: empty sample set");
  for (const auto& s : samples) {
    if (s.shape != samples.front().shape) {
      throw ShapeMismatch("calibrate_shape: samples span more than one shape");
    }
  }
  if (config.steps < 1 || !(config.step_size > 0.0) || config.iterations < 1) {
    throw InvalidArgument("calibrate_shape: steps, step_size and iterations must be positive");
  }

  NsCoefficients current = config.init;
  current.iterations = config.iterations;

  LossAndGradient at;
  try {
    at = evaluate(current, samples, true);
  } catch (const NumericOverflow&) {
    throw AllStepsDiverged("calibrate_shape: initial coefficients already diverge");
  }

  CalibrationResult result;
  result.coeffs = current;
  result.init_loss = at.loss;
  result.final_loss = at.loss;

  // Gradient descent with backtracking: a trial that fails to decrease the
  // loss (or overflows) halves the step; an accepted one grows it.
  double step = config.step_size;
  for (int trial = 0; trial < config.steps; ++trial) {
    const auto& g = at.grad;
    if (g.d_a == 0.0 && g.d_b == 0.0 && g.d_c == 0.0) break;

    NsCoefficients candidate = current;
    candidate.a -= step * g.d_a;
    candidate.b -= step * g.d_b;
    candidate.c -= step * g.d_c;

    LossAndGradient next;
    bool ok = std::isfinite(candidate.a) && std::isfinite(candidate.b) && std::isfinite(candidate.c);
    if (ok) {
      try {
        next = evaluate(candidate, samples, true);
      } catch (const NumericOverflow&) {
        ok = false;
      }
    }
    if (ok && next.loss < at.loss) {
      current = candidate;
      at = next;
      ++result.accepted_steps;
      step *= 1.5;
      if (at.loss < result.final_loss) {
        result.final_loss = at.loss;
        result.coeffs = current;
      }
    } else {
      step *= 0.5;
      if (step < std::numeric_limits<double>::min()) break;
    }
  }
  return result;
}

std::vector<SpectralSample> build_sample_set(std::span<const DenseMatrix> captured, ShapeKey shape,
                                             const CalibrationConfig& config) {
  if (shape.rows == 0 || shape.cols == 0) throw InvalidArgument("build_sample_set: zero dimension");
  shape = ShapeKey::tall(shape.rows, shape.cols);
  for (const auto& m : captured) {
    if (ShapeKey::of(m) != shape) {
      throw ShapeMismatch("build_sample_set: captured dump of shape " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + " does not match " + std::to_string(shape.rows) + "x" +
                          std::to_string(shape.cols));
    }
  }

  const MixRatio mix = config.mix;
  if (mix.captured_parts + mix.synthetic_parts < 1) {
    throw InvalidArgument("build_sample_set: mix ratio must have at least one part");
  }

  const std::size_t n_captured = mix.captured_parts == 0 ? 0 : captured.size();
  std::size_t n_synthetic = 0;
  if (n_captured == 0) {
    if (config.synthetic_samples < 1) throw InvalidArgument("build_sample_set: synthetic_samples must be >= 1");
    n_synthetic = static_cast<std::size_t>(config.synthetic_samples);
  } else {
    n_synthetic = (n_captured * mix.synthetic_parts + mix.captured_parts - 1) / mix.captured_parts;
  }

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(shape.rows), static_cast<std::uint32_t>(shape.cols)};
  std::mt19937_64 rng(seq);

  std::vector<SpectralSample> out;
  out.reserve(n_captured + n_synthetic);
  std::size_t next_captured = 0;
  std::size_t made_synthetic = 0;
  while (next_captured < n_captured || made_synthetic < n_synthetic) {
    for (unsigned i = 0; i < mix.captured_parts && next_captured < n_captured; ++i) {
      out.push_back(SpectralSample::from_matrix(captured[next_captured++], SampleOrigin::Captured));
    }
    const unsigned burst = n_captured == 0 ? static_cast<unsigned>(n_synthetic) : mix.synthetic_parts;
    for (unsigned i = 0; i < burst && made_synthetic < n_synthetic; ++i, ++made_synthetic) {
      out.push_back(SpectralSample::from_matrix(DenseMatrix::gaussian(shape.rows, shape.cols, rng),
                                                SampleOrigin::Synthetic));
    }
  }
  return out;
}

}  // namespace rootopt
