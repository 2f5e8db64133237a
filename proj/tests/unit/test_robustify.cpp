#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rootopt/errors.hpp"
#include "rootopt/robustify.hpp"

namespace rootopt {
namespace {

TEST(SoftThreshold, Branches) {
  EXPECT_EQ(soft_threshold(2.5, 1.0), 1.5);
  EXPECT_EQ(soft_threshold(-0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(1.0, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-1.0, 1.0), 0.0);
}

TEST(ProxObjective, SmallCases) {
  EXPECT_EQ(prox_objective(0.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(prox_objective(1.0, 1.0, 0.0), 0.0);
  EXPECT_EQ(prox_objective(2.0, 1.0, 0.5), 0.5 + 1.0);
}

TEST(ProxObjective, SoftThresholdIsGridMinimizer) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> xs(-4.0, 4.0);
  std::uniform_real_distribution<double> eps(0.0, 2.0);
  constexpr double step = 1e-3;
  for (int trial = 0; trial < 200; ++trial) {
    const double x = xs(rng);
    const double e = eps(rng);
    const double span = 2.0 * std::abs(x);
    double best_o = -span;
    double best = prox_objective(best_o, x, e);
    for (double o = -span; o <= span; o += step) {
      const double v = prox_objective(o, x, e);
      if (v < best) {
        best = v;
        best_o = o;
      }
    }
    EXPECT_LE(prox_objective(soft_threshold(x, e), x, e), best + 1e-12);
    EXPECT_NEAR(best_o, soft_threshold(x, e), 2 * step) << "x=" << x << " eps=" << e;
  }
}

TEST(Decompose, WorkedExample) {
  const DenseMatrix m = DenseMatrix::from_rows({{2, -0.5}, {1.5, -3}});
  const Decomposition d = decompose(m, ThresholdPolicy::fixed(1.0));
  EXPECT_TRUE(d.outliers == DenseMatrix::from_rows({{1, 0}, {0.5, -2}}));
  EXPECT_TRUE(d.base == DenseMatrix::from_rows({{1, -0.5}, {1, -1}}));
  EXPECT_EQ(d.epsilon_used, 1.0);
}

TEST(Decompose, ZeroThresholdAndMaxQuantile) {
  const DenseMatrix m = testing::random_matrix(6, 9, 4);
  const Decomposition zero = decompose(m, ThresholdPolicy::fixed(0.0));
  EXPECT_TRUE(zero.outliers == m);
  for (double v : zero.base.data()) EXPECT_EQ(v, 0.0);

  const Decomposition full = decompose(m, ThresholdPolicy::quantile(1.0));
  double max_abs = 0.0;
  for (double v : m.data()) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_EQ(full.epsilon_used, max_abs);
  EXPECT_TRUE(full.base == m);
  for (double v : full.outliers.data()) EXPECT_EQ(v, 0.0);
}

TEST(Decompose, ClampIsBitwiseAndReconstructionWithinUlp) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  for (int trial = 0; trial < 40; ++trial) {
    DenseMatrix m = testing::random_matrix(dim(rng), dim(rng), 900 + trial);
    for (double& v : m.data()) v *= 1.0 + 50.0 * (trial % 3);
    for (const auto& policy : {ThresholdPolicy::quantile(0.9), ThresholdPolicy::fixed(0.37)}) {
      const Decomposition d = decompose(m, policy);
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = m.data()[i];
        const double eps = d.epsilon_used;
        EXPECT_EQ(d.base.data()[i], std::clamp(x, -eps, eps));
        const double sum = d.base.data()[i] + d.outliers.data()[i];
        if (std::abs(x) <= 2.0 * eps) {
          EXPECT_EQ(sum, x);
        } else {
          // Beyond 2 eps the subtraction may round; the sum stays within one ulp.
          EXPECT_LE(std::abs(sum - x), std::abs(std::nextafter(x, 2.0 * x) - x));
        }
        EXPECT_LE(std::abs(d.base.data()[i]), eps);
        if (std::abs(x) <= eps) EXPECT_EQ(d.outliers.data()[i], 0.0);
      }
    }
  }
}

TEST(Decompose, TiesAtThresholdStayInBase) {
  const DenseMatrix m = DenseMatrix::from_rows({{1.0, -1.0, 2.0}});
  const Decomposition d = decompose(m, ThresholdPolicy::fixed(1.0));
  EXPECT_EQ(d.outliers(0, 0), 0.0);
  EXPECT_EQ(d.outliers(0, 1), 0.0);
  EXPECT_EQ(d.outliers(0, 2), 1.0);
}

TEST(SoftThreshold, OrderPreservingAndOneLipschitz) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> eps(0.0, 2.0);
  for (int i = 0; i < 5000; ++i) {
    const double x = normal(rng);
    const double y = normal(rng);
    const double e = eps(rng);
    const double tx = soft_threshold(x, e);
    const double ty = soft_threshold(y, e);
    EXPECT_LE(std::abs(tx - ty), std::abs(x - y) + 1e-15);
    if (std::abs(x) <= std::abs(y)) EXPECT_LE(std::abs(tx), std::abs(ty));
  }
}

TEST(Decompose, QuantileSparsityBound) {
  for (double p : {0.5, 0.85, 0.9, 0.95, 0.99}) {
    const DenseMatrix m = testing::random_matrix(37, 29, static_cast<std::uint64_t>(p * 1000));
    const Decomposition d = decompose(m, ThresholdPolicy::quantile(p));
    const OutlierStats s = outlier_stats(d, m);
    const double n = static_cast<double>(m.size());
    EXPECT_LE(s.outlier_fraction, (1.0 - p) + 1.0 / n) << p;
    EXPECT_GT(s.outlier_mass_ratio, 0.0);
    EXPECT_LT(s.outlier_mass_ratio, 1.0);
  }
}

TEST(ThresholdPolicy, Validation) {
  EXPECT_THROW(ThresholdPolicy::fixed(-1.0), InvalidArgument);
  EXPECT_THROW(ThresholdPolicy::quantile(1.1), InvalidArgument);
  EXPECT_THROW(ThresholdPolicy::quantile(std::nan("")), InvalidArgument);
  EXPECT_EQ(ThresholdPolicy::quantile(0.9).mode(), ThresholdPolicy::Mode::Quantile);
}

TEST(OutlierStats, ZeroMatrix) {
  const DenseMatrix z(3, 3);
  const OutlierStats s = outlier_stats(decompose(z, ThresholdPolicy::quantile(0.9)), z);
  EXPECT_EQ(s.outlier_fraction, 0.0);
  EXPECT_EQ(s.outlier_mass_ratio, 0.0);
}

}  // namespace
}  // namespace rootopt
