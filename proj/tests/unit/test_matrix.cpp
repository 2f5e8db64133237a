#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rootopt/errors.hpp"
#include "rootopt/matrix.hpp"

namespace rootopt {
namespace {

using testing::polar_by_gram;
using testing::random_matrix;

TEST(DenseMatrix, RejectsBadBuffers) {
  EXPECT_THROW(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), ShapeMismatch);
  EXPECT_THROW(DenseMatrix(1, 2, {1.0, std::nan("")}), NonFiniteValue);
  EXPECT_THROW(DenseMatrix(1, 1, {INFINITY}), NonFiniteValue);
  const DenseMatrix m(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m(1, 0), 4.0);
  EXPECT_EQ(m.transposed()(0, 1), 4.0);
}

TEST(FrobeniusNorm, SmallCases) {
  EXPECT_EQ(frobenius_norm(DenseMatrix::from_rows({{3, 4}})), 5.0);
  EXPECT_EQ(frobenius_norm(DenseMatrix::identity(4)), 2.0);
}

TEST(FrobeniusNorm, MatchesNaiveDoubleLoop) {
  const DenseMatrix m = random_matrix(8, 8, 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) sum += m(i, j) * m(i, j);
  }
  EXPECT_NEAR(frobenius_norm(m), std::sqrt(sum), 1e-14);
}

TEST(Svd, PositiveDiagonal) {
  const SvdResult d = svd(DenseMatrix::from_rows({{3, 0}, {0, 2}}));
  ASSERT_EQ(d.singular_values.size(), 2u);
  EXPECT_NEAR(d.singular_values[0], 3.0, 1e-15);
  EXPECT_NEAR(d.singular_values[1], 2.0, 1e-15);
  EXPECT_NEAR((d.u.values() - RowMajorMatrix::Identity(2, 2)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((d.vt.values() - RowMajorMatrix::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(Svd, ZeroMatrix) {
  const SvdResult d = svd(DenseMatrix(2, 2));
  EXPECT_EQ(d.singular_values, (std::vector<double>{0.0, 0.0}));
}

TEST(Svd, ReconstructsAndIsOrthonormal) {
  const DenseMatrix m = random_matrix(5, 3, 1);
  const SvdResult d = svd(m);
  EXPECT_LT(testing::relative_frobenius(reconstruct(d), m), 1e-8);
  EXPECT_LT((d.u.values().transpose() * d.u.values() - RowMajorMatrix::Identity(3, 3)).norm(), 1e-8);
  EXPECT_LT((d.vt.values() * d.vt.values().transpose() - RowMajorMatrix::Identity(3, 3)).norm(), 1e-8);
}

TEST(Svd, SortedCanonicalAndDeterministic) {
  const DenseMatrix m = random_matrix(7, 11, 5);
  const SvdResult d = svd(m);
  EXPECT_TRUE(std::is_sorted(d.singular_values.rbegin(), d.singular_values.rend()));
  for (double s : d.singular_values) EXPECT_GE(s, 0.0);
  for (std::size_t j = 0; j < d.u.cols(); ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < d.u.rows(); ++i) {
      if (std::abs(d.u(i, j)) > std::abs(best)) best = d.u(i, j);
    }
    EXPECT_GT(best, 0.0) << "column " << j;
  }
  const SvdResult again = svd(m);
  EXPECT_TRUE(again.u == d.u);
  EXPECT_TRUE(again.vt == d.vt);
  EXPECT_EQ(again.singular_values, d.singular_values);
}

TEST(Svd, ReconstructionPropertyAcrossShapes) {
  const std::vector<std::pair<std::size_t, std::size_t>> shapes = {
      {1, 1}, {1, 9}, {9, 1}, {16, 16}, {40, 13}, {13, 40}, {128, 96}, {512, 512}};
  std::uint64_t seed = 100;
  for (auto [r, c] : shapes) {
    const DenseMatrix m = random_matrix(r, c, seed++);
    EXPECT_LT(testing::relative_frobenius(reconstruct(svd(m)), m), 1e-8) << r << "x" << c;
  }
}

TEST(PolarFactor, DiagonalAndPermutation) {
  const DenseMatrix o = polar_factor(DenseMatrix::from_rows({{2, 0}, {0, 5}}));
  EXPECT_LT((o.values() - RowMajorMatrix::Identity(2, 2)).norm(), 1e-14);

  const DenseMatrix perm = DenseMatrix::from_rows({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  EXPECT_LT((polar_factor(perm).values() - perm.values()).norm(), 1e-10);
}

TEST(PolarFactor, MatchesGramEigenOracle) {
  const DenseMatrix m = random_matrix(6, 4, 2);
  const DenseMatrix o = polar_factor(m);
  EXPECT_LT((o.values().transpose() * o.values() - RowMajorMatrix::Identity(4, 4)).norm(), 1e-8);
  EXPECT_LT((o.values() - polar_by_gram(m).values()).norm(), 1e-8);

  const DenseMatrix wide = random_matrix(3, 8, 3);
  EXPECT_LT((polar_factor(wide).values() - polar_by_gram(wide).values()).norm(), 1e-8);
}

TEST(PolarFactor, OrthogonalFixedPointAndScaleInvariance) {
  const DenseMatrix q = polar_factor(random_matrix(10, 10, 4));
  EXPECT_LT((polar_factor(q).values() - q.values()).norm(), 1e-10);

  const DenseMatrix m = random_matrix(12, 5, 6);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    const DenseMatrix scaled(RowMajorMatrix(c * m.values()));
    EXPECT_LT((polar_factor(scaled).values() - polar_factor(m).values()).norm(), 1e-9) << c;
  }
}

TEST(PolarFactor, RankDeficientThrows) {
  EXPECT_THROW(polar_factor(DenseMatrix::from_rows({{1, 2}, {2, 4}})), RankDeficient);
  EXPECT_THROW(polar_factor(DenseMatrix(3, 2)), RankDeficient);
}

TEST(QuantileAbs, OneToTen) {
  std::vector<double> v(10);
  std::iota(v.begin(), v.end(), 1.0);
  const DenseMatrix m(2, 5, v);
  EXPECT_EQ(quantile_abs(m, 1.0), 10.0);
  EXPECT_EQ(quantile_abs(m, 0.0), 1.0);
  // h = 0.9 * 9 = 8.1 -> 9 + 0.1 * (10 - 9)
  EXPECT_NEAR(quantile_abs(m, 0.9), 9.1, 1e-12);
  EXPECT_THROW(quantile_abs(m, 1.5), InvalidArgument);
  EXPECT_THROW(quantile_abs(m, -0.1), InvalidArgument);
}

TEST(QuantileAbs, MonotoneAndPermutationInvariant) {
  const DenseMatrix m = random_matrix(9, 7, 8);
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double q = quantile_abs(m, i / 100.0);
    EXPECT_GE(q, prev);
    prev = q;
  }
  std::vector<double> shuffled(m.data().begin(), m.data().end());
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (auto& v : shuffled) v = -v;
  const DenseMatrix permuted(7, 9, shuffled);
  for (double p : {0.0, 0.25, 0.5, 0.9, 0.99, 1.0}) EXPECT_EQ(quantile_abs(permuted, p), quantile_abs(m, p));
}

}  // namespace
}  // namespace rootopt
