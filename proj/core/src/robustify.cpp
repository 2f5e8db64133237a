#include "rootopt/robustify.hpp"

#include <algorithm>
#include <cmath>

#include "rootopt/errors.hpp"

namespace rootopt {

ThresholdPolicy ThresholdPolicy::fixed(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("ThresholdPolicy: epsilon must be finite and >= 0");
  }
  return {Mode::FixedEpsilon, epsilon};
}

ThresholdPolicy ThresholdPolicy::quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("ThresholdPolicy: quantile p must lie in [0, 1]");
  return {Mode::Quantile, p};
}

double ThresholdPolicy::resolve(const DenseMatrix& m) const {
  return mode_ == Mode::FixedEpsilon ? value_ : quantile_abs(m, value_);
}

double prox_objective(double o, double x, double eps) {
  const double d = o - x;
  return 0.5 * d * d + eps * std::abs(o);
}

Decomposition decompose(const DenseMatrix& m, const ThresholdPolicy& policy) {
  if (!m.all_finite()) throw NonFiniteValue("decompose: non-finite input");
  Decomposition d;
  d.epsilon_used = policy.resolve(m);
  d.base = DenseMatrix(m.rows(), m.cols());
  d.outliers = DenseMatrix(m.rows(), m.cols());

  const double eps = d.epsilon_used;
  const auto in = m.data();
  auto base = d.base.data();
  auto out = d.outliers.data();
  // The base is written as a clamp rather than m - T(m): in floating point
  // x - (x - eps) is not always eps.
  for (std::size_t i = 0; i < in.size(); ++i) {
    base[i] = std::clamp(in[i], -eps, eps);
    out[i] = soft_threshold(in[i], eps);
  }
  return d;
}

OutlierStats outlier_stats(const Decomposition& d, const DenseMatrix& m) {
  OutlierStats s;
  s.epsilon = d.epsilon_used;
  const auto o = d.outliers.data();
  const auto nonzero = std::count_if(o.begin(), o.end(), [](double v) { return v != 0.0; });
  s.outlier_fraction = o.empty() ? 0.0 : static_cast<double>(nonzero) / static_cast<double>(o.size());
  const double total = frobenius_norm(m);
  s.outlier_mass_ratio = total > 0.0 ? frobenius_norm(d.outliers) / total : 0.0;
  return s;
}

}  // namespace rootopt
