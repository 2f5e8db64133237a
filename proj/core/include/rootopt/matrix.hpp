#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rootopt {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major real matrix. Every gradient, momentum buffer and weight in the
/// library is carried as a DenseMatrix.
///
/// Construction from external data rejects non-finite entries. Arithmetic is
/// delegated to Eigen through values().
class DenseMatrix {
 public:
  DenseMatrix() = default;

  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);

  /// Takes ownership of a row-major buffer; throws ShapeMismatch when the
  /// length is not rows*cols and NonFiniteValue on NaN/Inf.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  explicit DenseMatrix(RowMajorMatrix values);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> entries);
  /// i.i.d. standard normal entries drawn in row-major order.
  static DenseMatrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  bool empty() const { return values_.size() == 0; }

  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  double& operator()(std::size_t i, std::size_t j) { return values_(i, j); }

  std::span<const double> data() const { return {values_.data(), size()}; }
  std::span<double> data() { return {values_.data(), size()}; }

  const RowMajorMatrix& values() const { return values_; }
  RowMajorMatrix& values() { return values_; }

  DenseMatrix transposed() const;
  bool all_finite() const;

  /// Bitwise equality of shape and every entry.
  friend bool operator==(const DenseMatrix& lhs, const DenseMatrix& rhs);

 private:
  RowMajorMatrix values_;
};

struct SvdResult {
  DenseMatrix u;                         // rows x k, orthonormal columns
  std::vector<double> singular_values;   // non-increasing, k = min(rows, cols)
  DenseMatrix vt;                        // k x cols, orthonormal rows
};

double frobenius_norm(const DenseMatrix& m);

/// Thin SVD. Signs are canonicalized so that the largest-magnitude entry of
/// each left singular vector is positive (first index wins ties), which makes
/// the result deterministic. Throws ConvergenceFailure if the solver fails.
SvdResult svd(const DenseMatrix& m);

/// Singular values only, non-increasing.
std::vector<double> singular_values(const DenseMatrix& m);

/// Relative cutoff below which a singular value counts as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Orthogonal polar factor U V^T. Throws RankDeficient when the smallest
/// singular value is below kRankTolerance times the largest.
DenseMatrix polar_factor(const DenseMatrix& m);

/// p-quantile of the absolute entries, linear interpolation at h = p (N - 1).
double quantile_abs(const DenseMatrix& m, double p);

/// Reconstructs u * diag(s) * vt.
DenseMatrix reconstruct(const SvdResult& svd);

}  // namespace rootopt
