#include "rootopt/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "rootopt/errors.hpp"

namespace rootopt {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : values_(RowMajorMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw ShapeMismatch("DenseMatrix: buffer of length " + std::to_string(data.size()) +
                        " does not match shape " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw NonFiniteValue("DenseMatrix: non-finite entry in input");
  }
  values_ = Eigen::Map<const RowMajorMatrix>(data.data(), static_cast<Eigen::Index>(rows),
                                             static_cast<Eigen::Index>(cols));
}

DenseMatrix::DenseMatrix(RowMajorMatrix values) : values_(std::move(values)) {}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeMismatch("DenseMatrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  return DenseMatrix(RowMajorMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> entries) {
  DenseMatrix out(entries.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) out(i, i) = entries[i];
  return out;
}

DenseMatrix DenseMatrix::gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix out(rows, cols);
  for (double& v : out.data()) v = normal(rng);
  return out;
}

DenseMatrix DenseMatrix::transposed() const { return DenseMatrix(RowMajorMatrix(values_.transpose())); }

bool DenseMatrix::all_finite() const { return values_.allFinite(); }

bool operator==(const DenseMatrix& lhs, const DenseMatrix& rhs) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) return false;
  const auto a = lhs.data();
  const auto b = rhs.data();
  return std::equal(a.begin(), a.end(), b.begin());
}

double frobenius_norm(const DenseMatrix& m) {
  double sum = 0.0;
  for (double v : m.data()) sum += v * v;
  return std::sqrt(sum);
}

SvdResult svd(const DenseMatrix& m) {
  if (m.empty()) throw InvalidArgument("svd: empty matrix");
  const Eigen::MatrixXd a = m.values();
  Eigen::BDCSVD<Eigen::MatrixXd> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("svd: solver did not converge");
  }

  RowMajorMatrix u = solver.matrixU();
  RowMajorMatrix vt = solver.matrixV().transpose();
  const Eigen::VectorXd& s = solver.singularValues();

  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > best) {
        best = std::abs(u(i, j));
        arg = i;
      }
    }
    if (u(arg, j) < 0.0) {
      u.col(j) *= -1.0;
      vt.row(j) *= -1.0;
    }
  }

  SvdResult out;
  out.u = DenseMatrix(std::move(u));
  out.vt = DenseMatrix(std::move(vt));
  out.singular_values.assign(s.data(), s.data() + s.size());
  return out;
}

std::vector<double> singular_values(const DenseMatrix& m) {
  if (m.empty()) throw InvalidArgument("singular_values: empty matrix");
  const Eigen::MatrixXd a = m.values();
  Eigen::BDCSVD<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("singular_values: solver did not converge");
  }
  const Eigen::VectorXd& s = solver.singularValues();
  return {s.data(), s.data() + s.size()};
}

DenseMatrix polar_factor(const DenseMatrix& m) {
  SvdResult d = svd(m);
  const double largest = d.singular_values.front();
  const double smallest = d.singular_values.back();
  if (!(largest > 0.0) || smallest <= kRankTolerance * largest) {
    throw RankDeficient("polar_factor: matrix is rank deficient, orthogonal factor is not unique");
  }
  return DenseMatrix(RowMajorMatrix(d.u.values() * d.vt.values()));
}

double quantile_abs(const DenseMatrix& m, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile_abs: p must lie in [0, 1]");
  if (m.empty()) throw InvalidArgument("quantile_abs: empty matrix");
  std::vector<double> mags(m.size());
  std::transform(m.data().begin(), m.data().end(), mags.begin(), [](double v) { return std::abs(v); });
  const double h = p * static_cast<double>(mags.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto lo_it = mags.begin() + static_cast<std::ptrdiff_t>(std::min(lo, mags.size() - 1));
  std::nth_element(mags.begin(), lo_it, mags.end());
  if (lo + 1 >= mags.size()) return *lo_it;
  // The next order statistic is the smallest value in the upper partition.
  const double next = *std::min_element(lo_it + 1, mags.end());
  const double frac = h - static_cast<double>(lo);
  return *lo_it + frac * (next - *lo_it);
}

DenseMatrix reconstruct(const SvdResult& d) {
  Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(d.singular_values.data(),
                                                          static_cast<Eigen::Index>(d.singular_values.size()));
  return DenseMatrix(RowMajorMatrix(d.u.values() * s.asDiagonal() * d.vt.values()));
}

}  // namespace rootopt
