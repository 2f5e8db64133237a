#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rootopt/gradient_stats.hpp"

namespace rootopt {
namespace {

TEST(GradientStats, GaussianSampleLooksGaussian) {
  std::mt19937_64 rng(3);
  const std::vector<DenseMatrix> g = {DenseMatrix::gaussian(1000, 1000, rng)};
  const GradientReport r = gradient_stats(g);
  EXPECT_EQ(r.count, 1000000u);
  EXPECT_NEAR(r.mean, 0.0, 0.005);
  EXPECT_NEAR(r.stddev, 1.0, 0.005);
  EXPECT_NEAR(r.excess_kurtosis, 0.0, 0.05);
  EXPECT_NEAR(r.frac_beyond_3sigma, 0.0027, 0.0005);
  EXPECT_LT(r.qq_deviation, 0.02);
  EXPECT_FALSE(r.degenerate);
  std::size_t total = r.underflow + r.overflow;
  for (auto c : r.histogram) total += c;
  EXPECT_EQ(total, r.count);
  EXPECT_EQ(r.bin_edges.size(), r.histogram.size() + 1);
}

TEST(GradientStats, SpikesFattenTheTail) {
  std::mt19937_64 rng(5);
  DenseMatrix clean = DenseMatrix::gaussian(200, 500, rng);
  DenseMatrix spiked = clean;
  std::bernoulli_distribution hit(0.01);
  std::bernoulli_distribution sign(0.5);
  for (double& v : spiked.data()) {
    if (hit(rng)) v = sign(rng) ? 100.0 : -100.0;
  }
  const std::vector<DenseMatrix> a = {clean};
  const std::vector<DenseMatrix> b = {spiked};
  const GradientReport rc = gradient_stats(a);
  const GradientReport rs = gradient_stats(b);
  EXPECT_GE(rs.frac_beyond_3sigma - rc.frac_beyond_3sigma, 0.005);
  EXPECT_GT(rs.excess_kurtosis, 10.0);
  EXPECT_GT(rs.qq_deviation, rc.qq_deviation);
}

TEST(GradientStats, ConstantInputIsDegenerate) {
  const std::vector<DenseMatrix> g = {DenseMatrix(RowMajorMatrix::Constant(4, 5, 2.5))};
  const GradientReport r = gradient_stats(g);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.mean, 2.5);
  EXPECT_EQ(r.stddev, 0.0);
  EXPECT_FALSE(std::isnan(r.excess_kurtosis));
  EXPECT_FALSE(std::isnan(r.qq_deviation));
  std::stringstream ss;
  write_report(ss, r);
  EXPECT_EQ(ss.str().find("nan"), std::string::npos);
}

TEST(GradientStats, PoolsSeveralMatrices) {
  const std::vector<DenseMatrix> g = {DenseMatrix::from_rows({{1.0, -1.0}}), DenseMatrix::from_rows({{1.0}, {-1.0}})};
  const GradientReport r = gradient_stats(g, 4, 2.0);
  EXPECT_EQ(r.count, 4u);
  EXPECT_EQ(r.mean, 0.0);
  EXPECT_NEAR(r.stddev, 1.0, 1e-15);
  EXPECT_NEAR(r.excess_kurtosis, -2.0, 1e-12);
  std::stringstream ss;
  write_histogram_csv(ss, r);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "bin_lo,bin_hi,count");
}

}  // namespace
}  // namespace rootopt
