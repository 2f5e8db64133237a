#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rootopt/calibration.hpp"
#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

SpectralSample sample_of(std::vector<double> sigmas) {
  SpectralSample s;
  s.shape = ShapeKey{sigmas.size(), sigmas.size()};
  s.sigmas = std::move(sigmas);
  return s;
}

// Independent loss: composes the quintic written out term by term.
double oracle_loss(const NsCoefficients& k, const std::vector<SpectralSample>& samples) {
  double total = 0.0;
  for (const auto& s : samples) {
    for (double sigma : s.sigmas) {
      const double r = testing::composed(sigma, k) - 1.0;
      total += r * r;
    }
  }
  return total / static_cast<double>(samples.size());
}

std::vector<SpectralSample> gaussian_samples(std::size_t rows, std::size_t cols, int n, std::uint64_t seed) {
  std::vector<SpectralSample> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(SpectralSample::from_matrix(testing::random_matrix(rows, cols, seed + i), SampleOrigin::Synthetic));
  }
  return out;
}

TEST(NewtonLoss, WorkedExamples) {
  const std::vector<SpectralSample> one{sample_of({1.0})};
  for (int t : {1, 3, 5, 8}) {
    NsCoefficients k = kClassicQuintic;
    k.iterations = t;
    EXPECT_EQ(newton_loss(k, one), 0.0);
  }

  NsCoefficients muon1 = kMuonCoefficients;
  muon1.iterations = 1;
  EXPECT_NEAR(newton_loss(muon1, one), 0.08940, 5e-6);
  EXPECT_NEAR(newton_loss(muon1, one), (0.7010 - 1.0) * (0.7010 - 1.0), 1e-12);

  NsCoefficients classic3 = kClassicQuintic;
  classic3.iterations = 3;
  const std::vector<SpectralSample> zero_and_one{sample_of({0.0, 1.0})};
  EXPECT_EQ(newton_loss(classic3, zero_and_one), 1.0);
}

TEST(NewtonLoss, AveragesOverSamplesAndMatchesOracle) {
  const auto samples = gaussian_samples(40, 12, 5, 77);
  EXPECT_NEAR(newton_loss(kMuonCoefficients, samples), oracle_loss(kMuonCoefficients, samples), 1e-12);
  std::vector<SpectralSample> doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  EXPECT_NEAR(newton_loss(kMuonCoefficients, doubled), newton_loss(kMuonCoefficients, samples), 1e-12);
}

TEST(NewtonLoss, OverflowAndEmpty) {
  const std::vector<SpectralSample> one{sample_of({0.9})};
  EXPECT_THROW(newton_loss({50.0, 50.0, 50.0, 5}, one), NumericOverflow);
  EXPECT_THROW(newton_loss(kMuonCoefficients, std::vector<SpectralSample>{}), InvalidArgument);
}

TEST(LossGradient, HandDifferentiatedSingleStep) {
  const std::vector<SpectralSample> one{sample_of({1.0})};
  const NsCoefficients k{1.3, -0.4, 0.2, 1};
  const CoefficientGradient g = loss_gradient(k, one);
  const double expected = 2.0 * (k.a + k.b + k.c - 1.0);
  EXPECT_NEAR(g.d_a, expected, 1e-14);
  EXPECT_NEAR(g.d_b, expected, 1e-14);
  EXPECT_NEAR(g.d_c, expected, 1e-14);
}

TEST(LossGradient, ZeroAtZeroResidual) {
  const std::vector<SpectralSample> one{sample_of({1.0})};
  const CoefficientGradient g = loss_gradient(kClassicQuintic, one);
  EXPECT_EQ(g.d_a, 0.0);
  EXPECT_EQ(g.d_b, 0.0);
  EXPECT_EQ(g.d_c, 0.0);
}

TEST(LossGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  constexpr double h = 1e-6;
  for (int probe = 0; probe < 100; ++probe) {
    const auto samples = gaussian_samples(24 + probe % 7, 8 + probe % 5, 2, 1000 + 3 * probe);
    // Redraw triples whose iterates blow up; the loss is undefined there.
    NsCoefficients k;
    do {
      k = {kMuonCoefficients.a + jitter(rng), kMuonCoefficients.b + jitter(rng), kMuonCoefficients.c + jitter(rng),
           1 + probe % 5};
    } while (!std::isfinite(oracle_loss(k, samples)) || oracle_loss(k, samples) > 1e3);
    const CoefficientGradient g = loss_gradient(k, samples);
    const auto fd = [&](int which) {
      NsCoefficients up = k;
      NsCoefficients down = k;
      double* pu = which == 0 ? &up.a : which == 1 ? &up.b : &up.c;
      double* pd = which == 0 ? &down.a : which == 1 ? &down.b : &down.c;
      *pu += h;
      *pd -= h;
      return (oracle_loss(up, samples) - oracle_loss(down, samples)) / (2.0 * h);
    };
    const double fa = fd(0);
    const double fb = fd(1);
    const double fc = fd(2);
    const double diff = std::sqrt((fa - g.d_a) * (fa - g.d_a) + (fb - g.d_b) * (fb - g.d_b) + (fc - g.d_c) * (fc - g.d_c));
    const double ref = std::sqrt(g.d_a * g.d_a + g.d_b * g.d_b + g.d_c * g.d_c);
    EXPECT_LT(diff / ref, 1e-4) << "probe " << probe;
  }
}

TEST(CalibrateShape, ZeroLossFixedPoint) {
  const std::vector<SpectralSample> ones{sample_of({1.0, 1.0, 1.0})};
  CalibrationConfig cfg;
  cfg.init = kClassicQuintic;
  const CalibrationResult r = calibrate_shape(ones, cfg);
  EXPECT_EQ(r.coeffs, kClassicQuintic);
  EXPECT_EQ(r.final_loss, 0.0);
}

TEST(CalibrateShape, ImprovesOnDeskScaleWideShape) {
  const auto samples = gaussian_samples(64, 512, 4, 5);
  CalibrationConfig cfg;
  cfg.steps = 400;
  const CalibrationResult r = calibrate_shape(samples, cfg);
  EXPECT_EQ(r.init_loss, newton_loss(kMuonCoefficients, samples));
  EXPECT_LT(r.final_loss, r.init_loss);
  EXPECT_NEAR(newton_loss(r.coeffs, samples), r.final_loss, 1e-12);
  EXPECT_GT(r.accepted_steps, 0);
}

TEST(CalibrateShape, MonotoneAndSubsetDominance) {
  for (int trial = 0; trial < 4; ++trial) {
    const auto full = gaussian_samples(48, 16 + 8 * trial, 6, 300 + 10 * trial);
    CalibrationConfig cfg;
    cfg.steps = 200;
    const CalibrationResult on_full = calibrate_shape(full, cfg);
    EXPECT_LE(on_full.final_loss, newton_loss(cfg.init, full));

    const std::vector<SpectralSample> subset(full.begin(), full.begin() + 2);
    CalibrationConfig sub_cfg = cfg;
    sub_cfg.init = on_full.coeffs;
    const CalibrationResult on_subset = calibrate_shape(subset, sub_cfg);
    EXPECT_LE(newton_loss(on_subset.coeffs, subset), newton_loss(on_full.coeffs, subset));
  }
}

TEST(CalibrateShape, Errors) {
  const std::vector<SpectralSample> mixed{sample_of({0.5, 0.5}), sample_of({1.0})};
  EXPECT_THROW(calibrate_shape(mixed, {}), ShapeMismatch);
  EXPECT_THROW(calibrate_shape(std::vector<SpectralSample>{}, {}), InvalidArgument);
  const std::vector<SpectralSample> one{sample_of({0.9})};
  CalibrationConfig cfg;
  cfg.init = {50.0, 50.0, 50.0, 5};
  EXPECT_THROW(calibrate_shape(one, cfg), AllStepsDiverged);
}

TEST(CalibrateShape, Deterministic) {
  const auto samples = gaussian_samples(32, 96, 3, 9);
  CalibrationConfig cfg;
  cfg.steps = 150;
  const CalibrationResult a = calibrate_shape(samples, cfg);
  const CalibrationResult b = calibrate_shape(samples, cfg);
  EXPECT_EQ(a.coeffs, b.coeffs);
  EXPECT_EQ(a.final_loss, b.final_loss);
}

TEST(BuildSampleSet, SyntheticOnly) {
  CalibrationConfig cfg;
  cfg.synthetic_samples = 5;
  const auto set = build_sample_set({}, ShapeKey{16, 40}, cfg);
  ASSERT_EQ(set.size(), 5u);
  for (const auto& s : set) {
    EXPECT_EQ(s.origin, SampleOrigin::Synthetic);
    EXPECT_EQ(s.shape, (ShapeKey{40, 16}));
    EXPECT_EQ(s.sigmas.size(), 16u);
  }
}

TEST(BuildSampleSet, MixRatioArithmeticAndInterleaving) {
  const std::vector<DenseMatrix> captured{testing::random_matrix(12, 30, 1), testing::random_matrix(30, 12, 2)};
  CalibrationConfig cfg;
  cfg.mix = {1, 3};
  const auto set = build_sample_set(captured, ShapeKey{30, 12}, cfg);
  ASSERT_EQ(set.size(), 8u);
  const auto captured_count =
      std::count_if(set.begin(), set.end(), [](const SpectralSample& s) { return s.origin == SampleOrigin::Captured; });
  EXPECT_EQ(captured_count, 2);
  EXPECT_EQ(set[0].origin, SampleOrigin::Captured);
  EXPECT_EQ(set[4].origin, SampleOrigin::Captured);

  cfg.mix = {1, 1};
  EXPECT_EQ(build_sample_set(captured, ShapeKey{30, 12}, cfg).size(), 4u);
  cfg.mix = {0, 3};
  cfg.synthetic_samples = 3;
  const auto random_only = build_sample_set(captured, ShapeKey{30, 12}, cfg);
  EXPECT_EQ(random_only.size(), 3u);
}

TEST(BuildSampleSet, SamplesAreNormalized) {
  const std::vector<DenseMatrix> captured{DenseMatrix(RowMajorMatrix(40.0 * testing::random_matrix(9, 20, 3).values()))};
  CalibrationConfig cfg;
  const auto set = build_sample_set(captured, ShapeKey{20, 9}, cfg);
  for (const auto& s : set) {
    const double sum_sq = std::inner_product(s.sigmas.begin(), s.sigmas.end(), s.sigmas.begin(), 0.0);
    EXPECT_NEAR(sum_sq, 1.0, 1e-6);
  }
}

TEST(BuildSampleSet, ShapeMismatchAndDeterminism) {
  const std::vector<DenseMatrix> wrong{testing::random_matrix(5, 5, 1)};
  EXPECT_THROW(build_sample_set(wrong, ShapeKey{5, 6}, {}), ShapeMismatch);
  CalibrationConfig cfg;
  cfg.seed = 31;
  const auto a = build_sample_set({}, ShapeKey{8, 8}, cfg);
  const auto b = build_sample_set({}, ShapeKey{8, 8}, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].sigmas, b[i].sigmas);
}

}  // namespace
}  // namespace rootopt
