#include "rootopt/orthogonalize.hpp"

#include <cmath>
#include <string>

#include "rootopt/coefficient_table.hpp"
#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

void check_coefficients(const NsCoefficients& coeffs) {
  if (!std::isfinite(coeffs.a) || !std::isfinite(coeffs.b) || !std::isfinite(coeffs.c)) {
    throw InvalidArgument("NsCoefficients: non-finite coefficient");
  }
  if (coeffs.iterations < 1) throw InvalidArgument("NsCoefficients: iterations must be >= 1");
}

void check_same_shape(const DenseMatrix& lhs, const DenseMatrix& rhs, const char* what) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw ShapeMismatch(std::string(what) + ": shapes " + std::to_string(lhs.rows()) + "x" +
                        std::to_string(lhs.cols()) + " and " + std::to_string(rhs.rows()) + "x" +
                        std::to_string(rhs.cols()) + " differ");
  }
}

}  // namespace

double ns_polynomial(double x, const NsCoefficients& k) {
  const double x2 = x * x;
  return x * (k.a + x2 * (k.b + k.c * x2));
}

double ns_scalar(double x, const NsCoefficients& coeffs) {
  for (int t = 0; t < coeffs.iterations; ++t) x = ns_polynomial(x, coeffs);
  return x;
}

DenseMatrix ns_orthogonalize(const DenseMatrix& m, const NsCoefficients& coeffs) {
  check_coefficients(coeffs);
  const double norm = frobenius_norm(m);
  if (!(norm > kDegenerateNorm)) {
    throw DegenerateInput("ns_orthogonalize: input has zero Frobenius norm");
  }

  // Iterate on the tall orientation so the Gram matrix is the small one.
  const bool wide = m.cols() > m.rows();
  RowMajorMatrix x = wide ? RowMajorMatrix(m.values().transpose()) : m.values();
  x /= norm;

  RowMajorMatrix gram;
  RowMajorMatrix poly;
  for (int t = 0; t < coeffs.iterations; ++t) {
    gram.noalias() = x.transpose() * x;
    poly.noalias() = coeffs.c * (gram * gram);
    poly += coeffs.b * gram;
    RowMajorMatrix next = coeffs.a * x;
    next.noalias() += x * poly;
    x = std::move(next);
  }

  if (wide) return DenseMatrix(RowMajorMatrix(x.transpose()));
  return DenseMatrix(std::move(x));
}

DenseMatrix ns_orthogonalize_adaptive(const DenseMatrix& m, const CoefficientTable& table) {
  return ns_orthogonalize(m, table.lookup(m.rows(), m.cols()));
}

double relative_error(const DenseMatrix& approx, const DenseMatrix& exact) {
  check_same_shape(approx, exact, "relative_error");
  const double denom = frobenius_norm(exact);
  if (!(denom > 0.0)) throw InvalidArgument("relative_error: reference has zero norm");
  return (approx.values() - exact.values()).norm() / denom;
}

double orthogonalization_mse(const DenseMatrix& approx, const DenseMatrix& exact) {
  check_same_shape(approx, exact, "orthogonalization_mse");
  return (approx.values() - exact.values()).squaredNorm() / static_cast<double>(approx.size());
}

double orthogonality_residual(const DenseMatrix& m) {
  const RowMajorMatrix& v = m.values();
  const RowMajorMatrix gram = m.rows() >= m.cols() ? RowMajorMatrix(v.transpose() * v)
                                                    : RowMajorMatrix(v * v.transpose());
  return (gram - RowMajorMatrix::Identity(gram.rows(), gram.cols())).norm();
}

}  // namespace rootopt
