#pragma once

#include "rootopt/matrix.hpp"

namespace rootopt {

/// How the soft-threshold level epsilon is chosen for a matrix.
class ThresholdPolicy {
 public:
  enum class Mode { FixedEpsilon, Quantile };

  static ThresholdPolicy fixed(double epsilon);
  /// epsilon = quantile_abs(m, p), recomputed for every matrix.
  static ThresholdPolicy quantile(double p);

  Mode mode() const { return mode_; }
  double value() const { return value_; }

  double resolve(const DenseMatrix& m) const;

  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;

 private:
  ThresholdPolicy(Mode mode, double value) : mode_(mode), value_(value) {}

  Mode mode_ = Mode::Quantile;
  double value_ = 0.9;
};

/// m = base + outliers, with base the clamp of m to [-eps, eps] and outliers
/// the soft-thresholded residue.
struct Decomposition {
  DenseMatrix base;
  DenseMatrix outliers;
  double epsilon_used = 0.0;
};

/// sign(x) * max(|x| - eps, 0).
inline double soft_threshold(double x, double eps) {
  if (x > eps) return x - eps;
  if (x < -eps) return x + eps;
  return 0.0;
}

/// 0.5 (o - x)^2 + eps |o|; soft_threshold(x, eps) is its unique minimizer.
double prox_objective(double o, double x, double eps);

Decomposition decompose(const DenseMatrix& m, const ThresholdPolicy& policy);

struct OutlierStats {
  double epsilon = 0.0;
  double outlier_fraction = 0.0;    // nonzero outlier entries / all entries
  double outlier_mass_ratio = 0.0;  // ||O||_F / ||M||_F, 0 for a zero M
};

OutlierStats outlier_stats(const Decomposition& d, const DenseMatrix& m);

}  // namespace rootopt
