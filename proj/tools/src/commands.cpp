#include "rootopt_cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "rootopt/calibration.hpp"
#include "rootopt/coefficient_table.hpp"
#include "rootopt/errors.hpp"
#include "rootopt/gradient_stats.hpp"
#include "rootopt/matrix_io.hpp"
#include "rootopt/robustify.hpp"
#include "rootopt_cli/artifacts.hpp"
#include "rootopt_cli/svg.hpp"

namespace rootopt::cli {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<const CoefficientTable> load_table(const std::optional<fs::path>& path) {
  if (!path) return nullptr;
  return std::make_shared<const CoefficientTable>(CoefficientTable::load(*path));
}

std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out = "|";
  for (const auto& h : header) out += " " + h + " |";
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& row : rows) {
    out += "|";
    for (const auto& cell : row) out += " " + cell + " |";
    out += "\n";
  }
  return out;
}

std::string loss_svg(const std::vector<StepRecord>& records, const std::string& title) {
  Series s{"loss", {}, {}};
  for (const auto& r : records) {
    s.x.push_back(static_cast<double>(r.step));
    s.y.push_back(r.loss);
  }
  return line_chart_svg({s}, title, "step", "loss", true);
}

std::string noise_line(const NoiseInjector& n) {
  std::string out = fmt::format("spike probability {}, spike scale {}", n.spike_probability, n.spike_scale);
  if (n.heavy_tail_df) out += fmt::format(", Student-t df {}", *n.heavy_tail_df);
  return out;
}

}  // namespace

int cmd_calibrate(const CalibrateConfig& config, const CommandContext& ctx) {
  std::map<ShapeKey, std::vector<DenseMatrix>> captured;
  for (const auto& path : collect_dumps(config.captured)) {
    DenseMatrix m = read_matrix_dump(path);
    captured[ShapeKey::of(m)].push_back(std::move(m));
  }

  const auto& cal = config.calibration;
  NsCoefficients fallback = kMuonCoefficients;
  fallback.iterations = cal.iterations;
  CoefficientTable table(fallback);
  table.add_metadata("rootopt calibrate");
  table.add_metadata(fmt::format("seed {} iterations {} mix {}:{} steps {} step_size {}", cal.seed, cal.iterations,
                                 cal.mix.captured_parts, cal.mix.synthetic_parts, cal.steps, cal.step_size));

  std::set<ShapeKey> seen;
  std::vector<CalibrationReportRow> rows;
  bool diverged = false;
  for (const ShapeKey& requested : config.shapes) {
    const ShapeKey key = ShapeKey::tall(requested.rows, requested.cols);
    if (!seen.insert(key).second) {
      throw ConfigError("calibrate.shapes: " + format_shape(requested) + " repeats an earlier shape");
    }
    const auto it = captured.find(key);
    const std::span<const DenseMatrix> dumps =
        it == captured.end() ? std::span<const DenseMatrix>{} : std::span<const DenseMatrix>(it->second);
    const auto samples = build_sample_set(dumps, key, cal);

    CalibrationReportRow row;
    row.shape = requested;
    for (const auto& s : samples) (s.origin == SampleOrigin::Captured ? row.n_captured : row.n_synthetic) += 1;
    try {
      const CalibrationResult result = calibrate_shape(samples, cal);
      row.init_loss = result.init_loss;
      row.final_loss = result.final_loss;
      row.coeffs = result.coeffs;
      table.set(key.rows, key.cols, result.coeffs);
    } catch (const AllStepsDiverged& e) {
      row.init_loss = std::numeric_limits<double>::infinity();
      row.final_loss = row.init_loss;
      row.coeffs = cal.init;
      row.status = "diverged";
      table.add_metadata(fmt::format("diverged {}", format_shape(key)));
      diverged = true;
      ctx.log << "calibrate " << format_shape(key) << ": " << e.what() << '\n';
    }
    if (row.status == "ok") {
      ctx.log << fmt::format("calibrate {}: loss {:.6g} -> {:.6g} ({} captured, {} synthetic)\n", format_shape(key),
                             row.init_loss, row.final_loss, row.n_captured, row.n_synthetic);
    }
    rows.push_back(row);
  }

  table.save(ctx.out / "coefficients.txt");
  std::ostringstream report;
  write_calibration_report(report, rows);
  write_file(ctx.out / "calibration_report.csv", report.str());
  return diverged ? kExitNumeric : kExitOk;
}

int cmd_bench_orth(const BenchOrthConfig& config, const CommandContext& ctx) {
  const auto table = load_table(config.table);
  std::vector<OrthBenchRow> rows;
  for (const ShapeKey& shape : config.shapes) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(shape.rows), static_cast<std::uint32_t>(shape.cols)};
    std::mt19937_64 rng(seq);

    struct Strategy {
      std::string name;
      NsCoefficients coeffs;
    };
    NsCoefficients muon = kMuonCoefficients;
    muon.iterations = config.iterations;
    NsCoefficients classic = kClassicQuintic;
    classic.iterations = config.iterations;
    std::vector<Strategy> strategies = {{"muon-fixed", muon}, {"classic-quintic", classic}};
    if (table) strategies.push_back({"adaptive", table->lookup(shape.rows, shape.cols)});

    std::vector<double> rel(strategies.size(), 0.0);
    std::vector<double> mse(strategies.size(), 0.0);
    for (int i = 0; i < config.samples; ++i) {
      const DenseMatrix m = DenseMatrix::gaussian(shape.rows, shape.cols, rng);
      const DenseMatrix exact = polar_factor(m);
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        const DenseMatrix approx = ns_orthogonalize(m, strategies[s].coeffs);
        rel[s] += relative_error(approx, exact);
        mse[s] += orthogonalization_mse(approx, exact);
      }
    }
    const auto n = static_cast<double>(config.samples);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      rows.push_back({shape, strategies[s].name, rel[s] / n, mse[s] / n, static_cast<std::size_t>(config.samples)});
      ctx.log << fmt::format("bench-orth {} {}: rel_err {:.4g} mse {:.4g}\n", format_shape(shape), strategies[s].name,
                             rel[s] / n, mse[s] / n);
    }
  }
  std::ostringstream out;
  write_orth_bench(out, rows);
  write_file(ctx.out / "orth_bench.csv", out.str());
  return kExitOk;
}

int cmd_grad_stats(const GradStatsConfig& config, const CommandContext& ctx) {
  std::vector<std::string> sources;
  std::vector<DenseMatrix> matrices;
  if (!config.dumps.empty()) {
    for (const auto& path : collect_dumps(config.dumps)) {
      sources.push_back(path.generic_string());
      matrices.push_back(read_matrix_dump(path));
    }
    if (matrices.empty()) throw ConfigError("grad-stats: no .mtx dumps found");
  } else {
    // Live run: default Muon on the task, recording each noisy gradient the
    // optimizer receives.
    const auto task = make_task(config.task);
    auto params = task->initial_parameters();
    std::vector<ParamSpec> specs;
    for (const auto& p : params) specs.push_back(p.spec);
    Optimizer optimizer(OptimizerConfig{}, specs);
    NoiseStream stream(config.noise, config.seed);
    for (int step = 1; step <= config.draws; ++step) {
      auto grads = task->gradients(params);
      stream.apply(grads);
      for (std::size_t i = 0; i < grads.size(); ++i) {
        sources.push_back(fmt::format("step{}/{}", step, params[i].spec.name));
        matrices.push_back(grads[i]);
      }
      optimizer.step(params, grads);
    }
  }

  const GradientReport report = gradient_stats(matrices, config.bins, config.range_sigmas);
  std::ostringstream text;
  write_report(text, report);
  write_file(ctx.out / "grad_stats.txt", text.str());
  std::ostringstream hist;
  write_histogram_csv(hist, report);
  write_file(ctx.out / "histogram.csv", hist.str());

  const auto policy = ThresholdPolicy::quantile(config.quantile);
  std::string decomp = "source,rows,cols,epsilon,outlier_fraction,outlier_mass_ratio\n";
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const Decomposition d = decompose(matrices[i], policy);
    const OutlierStats s = outlier_stats(d, matrices[i]);
    decomp += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g}\n", sources[i], matrices[i].rows(), matrices[i].cols(),
                          s.epsilon, s.outlier_fraction, s.outlier_mass_ratio);
  }
  write_file(ctx.out / "decomposition.csv", decomp);
  ctx.log << fmt::format("grad-stats: {} entries, excess kurtosis {:.4g}, >3 sigma {:.4g}, qq deviation {:.4g}\n",
                         report.count, report.excess_kurtosis, report.frac_beyond_3sigma, report.qq_deviation);
  return kExitOk;
}

int cmd_train(const TrainConfig& config, const CommandContext& ctx) {
  const auto task = make_task(config.task);
  ExperimentConfig exp;
  exp.optimizer = config.optimizer;
  exp.optimizer.table = load_table(config.table);
  exp.schedule = config.schedule;
  exp.steps = config.steps;
  exp.seed = config.seed;
  exp.record_diagnostics = config.diagnostics;
  const fs::path momentum_dir = ctx.out / "momentum";
  if (config.capture) exp.capture.emplace(momentum_dir, config.capture->stride, config.capture->params);

  const RunLog log = run_experiment(*task, exp, config.noise);

  std::ostringstream csv;
  log.write_csv(csv);
  write_file(ctx.out / "runlog.csv", csv.str());
  if (config.diagnostics) {
    std::ostringstream diag;
    log.write_diagnostics_csv(diag);
    write_file(ctx.out / "diagnostics.csv", diag.str());
  }
  const std::size_t dumps = fs::exists(momentum_dir) ? collect_dumps({momentum_dir}).size() : 0;
  const auto& s = log.summary;
  const std::string summary =
      fmt::format("task {}\noptimizer {}\nsteps_requested {}\nsteps_completed {}\nfinal_loss {:.17g}\ndiverged {}\n"
                  "spike_steps {}\nmomentum_dumps {}\n",
                  task->name(), to_string(config.optimizer.kind), config.steps, s.steps_completed, s.final_loss,
                  s.diverged ? 1 : 0, s.spike_steps.size(), dumps);
  write_file(ctx.out / "summary.txt", summary);
  if (ctx.plot) {
    write_file(ctx.out / "loss.svg",
               loss_svg(log.records(), fmt::format("{} / {}", task->name(), to_string(config.optimizer.kind))));
  }
  ctx.log << fmt::format("train {} {}: final loss {:.6g}{} after {} steps\n", task->name(),
                         to_string(config.optimizer.kind), s.final_loss, s.diverged ? " (diverged)" : "",
                         s.steps_completed);
  return kExitOk;
}

int cmd_compare(const CompareConfig& config, const CommandContext& ctx) {
  std::vector<NamedOptimizer> optimizers;
  for (const auto& n : config.optimizers) {
    NamedOptimizer named{n.name, n.config};
    named.config.table = load_table(n.table);
    optimizers.push_back(std::move(named));
  }
  const ComparisonTable table =
      compare_optimizers(config.task, optimizers, config.noise, config.seeds, config.steps, config.schedule);
  std::ostringstream csv;
  table.write_csv(csv);
  write_file(ctx.out / "comparison.csv", csv.str());

  std::vector<std::vector<std::string>> tally_rows;
  for (const auto& t : table.tally()) {
    tally_rows.push_back({t.optimizer, fmt::format("{:.6g}", t.mean_final_loss), std::to_string(t.wins),
                          std::to_string(t.diverged)});
  }
  std::vector<std::vector<std::string>> seed_rows;
  for (const auto& r : table.rows) {
    seed_rows.push_back({std::to_string(r.seed), r.optimizer, fmt::format("{:.6g}", r.final_loss),
                         r.diverged ? "yes" : "no"});
  }
  const std::string md = fmt::format(
      "# Optimizer comparison\n\nTask: {}, {} steps, {} seeds, {}.\n\n{}\n## Per seed\n\n{}",
      task_kind_name(config.task.options), config.steps, config.seeds.size(), noise_line(config.noise),
      markdown_table({"optimizer", "mean final loss", "wins", "diverged"}, tally_rows),
      markdown_table({"seed", "optimizer", "final loss", "diverged"}, seed_rows));
  write_file(ctx.out / "summary.md", md);
  for (const auto& row : tally_rows) ctx.log << fmt::format("compare {}: mean {} wins {}\n", row[0], row[1], row[2]);
  return kExitOk;
}

int cmd_report(const ReportConfig& config, const CommandContext& ctx) {
  const fs::path& src = config.source;
  if (!fs::is_directory(src)) throw ConfigError("report: source is not a directory: " + src.string());
  std::string md = "# Run report\n";
  int sections = 0;

  if (std::ifstream in(src / "comparison.csv"); in) {
    const ComparisonTable table = ComparisonTable::read_csv(in);
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : table.tally()) {
      rows.push_back({t.optimizer, fmt::format("{:.6g}", t.mean_final_loss), std::to_string(t.wins),
                      std::to_string(t.diverged)});
    }
    md += "\n## Comparison\n\n" + markdown_table({"optimizer", "mean final loss", "wins", "diverged"}, rows);
    ++sections;
  }
  if (std::ifstream in(src / "runlog.csv"); in) {
    const RunLog log = RunLog::read_csv(in);
    const auto& recs = log.records();
    std::size_t spiked_steps = 0;
    for (const auto& r : recs) spiked_steps += r.spiked > 0 ? 1 : 0;
    std::vector<std::vector<std::string>> rows;
    if (!recs.empty()) {
      rows.push_back({std::to_string(recs.size()), fmt::format("{:.6g}", recs.front().loss),
                      fmt::format("{:.6g}", recs.back().loss), std::to_string(spiked_steps)});
    }
    md += "\n## Training run\n\n" + markdown_table({"steps", "first loss", "last loss", "steps with spikes"}, rows);
    if (ctx.plot) {
      write_file(ctx.out / "loss.svg", loss_svg(recs, "training loss"));
      md += "\n![loss](loss.svg)\n";
    }
    ++sections;
  }
  if (std::ifstream in(src / "orth_bench.csv"); in) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : read_orth_bench(in)) {
      rows.push_back({format_shape(r.shape), r.strategy, fmt::format("{:.4g}", r.rel_err_mean),
                      fmt::format("{:.4g}", r.mse_mean), std::to_string(r.n)});
    }
    md += "\n## Orthogonalization accuracy\n\n" +
          markdown_table({"shape", "strategy", "relative error", "MSE", "n"}, rows);
    ++sections;
  }
  if (std::ifstream in(src / "calibration_report.csv"); in) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : read_calibration_report(in)) {
      rows.push_back({format_shape(r.shape), fmt::format("{:.4g}", r.init_loss), fmt::format("{:.4g}", r.final_loss),
                      fmt::format("({:.5g}, {:.5g}, {:.5g})", r.coeffs.a, r.coeffs.b, r.coeffs.c), r.status});
    }
    md += "\n## Calibration\n\n" + markdown_table({"shape", "initial loss", "final loss", "(a, b, c)", "status"}, rows);
    ++sections;
  }
  if (std::ifstream in(src / "grad_stats.txt"); in) {
    std::stringstream buf;
    buf << in.rdbuf();
    md += "\n## Gradient distribution\n\n```\n" + buf.str() + "```\n";
    ++sections;
  }
  if (sections == 0) throw ConfigError("report: no known artifacts in " + src.string());
  write_file(ctx.out / "report.md", md);
  ctx.log << fmt::format("report: {} section(s) from {}\n", sections, src.string());
  return kExitOk;
}

}  // namespace rootopt::cli
