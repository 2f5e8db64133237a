#pragma once

#include <compare>
#include <cstddef>

#include "rootopt/matrix.hpp"

namespace rootopt {

/// Quintic Newton-Schulz coefficients: each step maps
///   X <- a X + b X (X^T X) + c X (X^T X)^2
/// and the same triple is reused for all `iterations` steps.
struct NsCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  int iterations = 5;

  friend bool operator==(const NsCoefficients&, const NsCoefficients&) = default;
};

inline constexpr NsCoefficients kMuonCoefficients{3.4445, -4.7750, 2.0315, 5};
inline constexpr NsCoefficients kClassicQuintic{1.875, -1.25, 0.375, 5};

/// Inputs with Frobenius norm at or below this are rejected as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// Matrix shape in tall orientation (rows >= cols). Coefficient tables are
/// keyed by this so that M and M^T share an entry.
struct ShapeKey {
  std::size_t rows = 0;
  std::size_t cols = 0;

  static ShapeKey tall(std::size_t rows, std::size_t cols) {
    return rows >= cols ? ShapeKey{rows, cols} : ShapeKey{cols, rows};
  }
  static ShapeKey of(const DenseMatrix& m) { return tall(m.rows(), m.cols()); }

  friend auto operator<=>(const ShapeKey&, const ShapeKey&) = default;
};

class CoefficientTable;

/// One application of the odd quintic g(x) = a x + b x^3 + c x^5.
double ns_polynomial(double x, const NsCoefficients& coeffs);

/// T-fold composition g^(T)(x) with T = coeffs.iterations.
double ns_scalar(double x, const NsCoefficients& coeffs);

/// Newton-Schulz orthogonalization of m. Works on the tall orientation,
/// normalizes by the Frobenius norm, runs coeffs.iterations steps and
/// restores the input orientation. Throws DegenerateInput for ||m||_F <= 1e-12.
DenseMatrix ns_orthogonalize(const DenseMatrix& m, const NsCoefficients& coeffs);

/// Shape-adaptive variant: coefficients come from table.lookup(shape of m).
DenseMatrix ns_orthogonalize_adaptive(const DenseMatrix& m, const CoefficientTable& table);

/// ||approx - exact||_F / ||exact||_F.
double relative_error(const DenseMatrix& approx, const DenseMatrix& exact);

/// Elementwise mean squared error ||approx - exact||_F^2 / (rows * cols).
double orthogonalization_mse(const DenseMatrix& approx, const DenseMatrix& exact);

/// ||m^T m - I||_F for tall m (wide inputs are transposed first).
double orthogonality_residual(const DenseMatrix& m);

}  // namespace rootopt
