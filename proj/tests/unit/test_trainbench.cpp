#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "rootopt/errors.hpp"
#include "rootopt/trainbench.hpp"

namespace rootopt {
namespace {

ExperimentConfig small_run(OptimizerKind kind, std::int64_t steps = 60) {
  ExperimentConfig cfg;
  cfg.optimizer.kind = kind;
  cfg.optimizer.lr = kind == OptimizerKind::AdamW ? 0.01 : 0.02;
  cfg.steps = steps;
  cfg.schedule = LrSchedule::cosine(steps, 0, 0.1);
  cfg.seed = 4;
  return cfg;
}

std::unique_ptr<Task> small_regression(std::uint64_t seed = 1) {
  return make_task({MatrixRegressionOptions{64, 16, 8, 0.1}, seed});
}

TEST(NoiseStream, ZeroProbabilityIsIdentity) {
  const auto task = small_regression();
  for (auto kind : {OptimizerKind::Muon, OptimizerKind::Root}) {
    NoiseInjector disabled;
    NoiseInjector zero;
    zero.spike_probability = 0.0;
    zero.spike_scale = 1e6;
    zero.seed = 99;
    EXPECT_EQ(run_experiment(*task, small_run(kind), disabled), run_experiment(*task, small_run(kind), zero));
  }
}

TEST(NoiseStream, SpikeRateAndScale) {
  NoiseInjector inj;
  inj.spike_probability = 0.05;
  inj.spike_scale = 100.0;
  NoiseStream stream(inj, 3);
  std::vector<DenseMatrix> grads = {DenseMatrix(RowMajorMatrix::Ones(200, 100))};
  const std::size_t spiked = stream.apply(grads);
  std::size_t big = 0;
  for (double v : grads[0].data()) {
    EXPECT_TRUE(v == 1.0 || v == 100.0);
    big += v == 100.0;
  }
  EXPECT_EQ(big, spiked);
  EXPECT_NEAR(static_cast<double>(spiked) / 20000.0, 0.05, 0.006);
}

TEST(NoiseStream, HeavyTailAddsNoise) {
  NoiseInjector inj;
  inj.heavy_tail_df = 3.0;
  NoiseStream stream(inj, 3);
  std::vector<DenseMatrix> grads = {DenseMatrix(RowMajorMatrix::Ones(10, 10))};
  EXPECT_EQ(stream.apply(grads), 0u);
  EXPECT_FALSE(grads[0] == DenseMatrix(RowMajorMatrix::Ones(10, 10)));
  NoiseInjector bad;
  bad.spike_probability = 1.5;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad.spike_probability = 0.1;
  bad.heavy_tail_df = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(RunExperiment, DeterministicAndDecreasing) {
  const auto task = small_regression();
  NoiseInjector noise;
  noise.spike_probability = 0.01;
  for (auto kind : {OptimizerKind::SgdMomentum, OptimizerKind::AdamW, OptimizerKind::Muon, OptimizerKind::Root}) {
    auto cfg = small_run(kind);
    if (kind == OptimizerKind::SgdMomentum) {
      cfg.optimizer.lr = 0.01;
      cfg.optimizer.momentum = 0.5;
    }
    const RunLog a = run_experiment(*task, cfg, noise);
    const RunLog b = run_experiment(*task, cfg, noise);
    EXPECT_EQ(a, b) << to_string(kind);
    ASSERT_EQ(a.records().size(), 60u);
    EXPECT_FALSE(a.summary.diverged);
    EXPECT_LT(a.summary.final_loss, a.records().front().loss) << to_string(kind);
  }
}

TEST(RunExperiment, RecordsRootDiagnostics) {
  const auto task = small_regression();
  auto cfg = small_run(OptimizerKind::Root, 10);
  cfg.record_diagnostics = true;
  const RunLog log = run_experiment(*task, cfg, NoiseInjector{});
  ASSERT_EQ(log.diagnostics.size(), 10u);
  for (const auto& r : log.records()) {
    EXPECT_GT(r.epsilon, 0.0);
    EXPECT_NEAR(r.outlier_frac, 0.1, 0.02);
  }
  EXPECT_EQ(log.diagnostics.front().param_name, task->initial_parameters()[0].spec.name);
}

TEST(RunExperiment, DivergenceStopsTheRun) {
  const auto task = small_regression();
  ExperimentConfig cfg;
  cfg.optimizer.kind = OptimizerKind::SgdMomentum;
  cfg.optimizer.lr = 50.0;
  cfg.optimizer.momentum = 0.0;
  cfg.steps = 500;
  const RunLog log = run_experiment(*task, cfg, NoiseInjector{});
  EXPECT_TRUE(log.summary.diverged);
  EXPECT_LT(log.summary.steps_completed, 500);
}

TEST(RunLog, CsvRoundTripAndMonotoneSteps) {
  RunLog log;
  log.append({1, 3.5, 1.25, 0.0, 0.0, 0});
  log.append({2, 0.1 + 0.2, 1e-300, 0.75, 0.1, 4});
  log.append({3, std::numeric_limits<double>::infinity(), 2.0, 0.5, 0.1, 0});
  EXPECT_THROW(log.append({3, 1.0, 1.0, 0.0, 0.0, 0}), InvalidArgument);
  std::stringstream ss;
  log.write_csv(ss);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "step,loss,grad_norm,epsilon,outlier_frac,spiked");
  const RunLog back = RunLog::read_csv(ss);
  EXPECT_EQ(back.records(), log.records());

  std::stringstream bad("step,loss\n1,2\n");
  EXPECT_THROW(RunLog::read_csv(bad), FormatError);
}

TEST(ComparisonTable, TallyAndCsv) {
  ComparisonTable t;
  t.rows = {{"reg", "muon", 0, 2.0, false}, {"reg", "root", 0, 1.0, false}, {"reg", "muon", 1, 0.5, false},
            {"reg", "root", 1, 0.5, false}, {"reg", "muon", 2, 1e13, true}, {"reg", "root", 2, 3.0, false}};
  const auto tally = t.tally();
  ASSERT_EQ(tally.size(), 2u);
  EXPECT_EQ(tally[0].optimizer, "muon");
  EXPECT_EQ(tally[0].wins, 1);  // tie on seed 1 goes to the earlier optimizer
  EXPECT_EQ(tally[1].wins, 2);
  EXPECT_EQ(tally[0].diverged, 1);

  std::stringstream ss;
  t.write_csv(ss);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "task,optimizer,seed,final_loss,diverged");
  EXPECT_EQ(ComparisonTable::read_csv(ss).rows, t.rows);
}

TEST(CompareOptimizers, RowsAndDeterminism) {
  NamedOptimizer muon{"muon", {}};
  NamedOptimizer root{"root", {}};
  root.config.kind = OptimizerKind::Root;
  const std::vector<NamedOptimizer> opts = {muon, root};
  const std::vector<std::uint64_t> seeds = {1, 2};
  NoiseInjector noise;
  noise.spike_probability = 0.01;
  const TaskSpec spec{MatrixRegressionOptions{64, 16, 8, 0.1}, 0};
  const auto a = compare_optimizers(spec, opts, noise, seeds, 40, LrSchedule::cosine(40));
  const auto b = compare_optimizers(spec, opts, noise, seeds, 40, LrSchedule::cosine(40));
  ASSERT_EQ(a.rows.size(), 4u);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.rows[0].task, "matrix_regression");

  EXPECT_THROW(compare_optimizers(spec, {}, noise, seeds, 40, LrSchedule::constant()), InvalidArgument);
  const std::vector<NamedOptimizer> comma = {{"a,b", {}}};
  EXPECT_THROW(compare_optimizers(spec, comma, noise, seeds, 40, LrSchedule::constant()), InvalidArgument);
}

}  // namespace
}  // namespace rootopt
