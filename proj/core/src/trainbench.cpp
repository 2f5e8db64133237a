#include "rootopt/trainbench.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string{} : field.substr(first, last - first + 1));
  }
  return fields;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("csv: bad number '" + s + "'");
  }
  if (used != s.size()) throw FormatError("csv: bad number '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw FormatError("csv: bad integer '" + s + "'");
  }
  if (used != s.size()) throw FormatError("csv: bad integer '" + s + "'");
  return v;
}

void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw FormatError("csv: expected header '" + header + "', got '" + line + "'");
}

constexpr const char* kRunLogHeader = "step,loss,grad_norm,epsilon,outlier_frac,spiked";
constexpr const char* kComparisonHeader = "task,optimizer,seed,final_loss,diverged";

}  // namespace

void NoiseInjector::validate() const {
  if (!(spike_probability >= 0.0 && spike_probability <= 1.0)) {
    throw InvalidArgument("noise: spike_probability must lie in [0, 1]");
  }
  if (!(spike_scale > 0.0)) throw InvalidArgument("noise: spike_scale must be > 0");
  if (heavy_tail_df && !(*heavy_tail_df > 0.0)) throw InvalidArgument("noise: heavy_tail_df must be > 0");
}

NoiseStream::NoiseStream(const NoiseInjector& injector, std::uint64_t run_seed) : injector_(injector) {
  injector_.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(injector.seed), static_cast<std::uint32_t>(injector.seed >> 32),
                    static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32), 0x5eedu};
  rng_.seed(seq);
}

std::size_t NoiseStream::apply(std::span<DenseMatrix> grads) {
  if (!injector_.active()) return 0;
  std::size_t spiked = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (DenseMatrix& g : grads) {
    double rms = 0.0;
    std::optional<std::student_t_distribution<double>> tail;
    if (injector_.heavy_tail_df) {
      rms = frobenius_norm(g) / std::sqrt(static_cast<double>(g.size()));
      tail.emplace(*injector_.heavy_tail_df);
    }
    for (double& v : g.data()) {
      if (injector_.spike_probability > 0.0 && unit(rng_) < injector_.spike_probability) {
        v *= injector_.spike_scale;
        ++spiked;
      }
      if (tail) v += rms * (*tail)(rng_);
    }
  }
  return spiked;
}

void RunLog::append(const StepRecord& record) {
  if (!records_.empty() && record.step <= records_.back().step) {
    throw InvalidArgument("RunLog: step indices must increase");
  }
  records_.push_back(record);
}

void RunLog::write_csv(std::ostream& out) const {
  out << kRunLogHeader << '\n';
  for (const auto& r : records_) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.step, r.loss, r.grad_norm, r.epsilon,
                       r.outlier_frac, r.spiked);
  }
}

RunLog RunLog::read_csv(std::istream& in) {
  expect_header(in, kRunLogHeader);
  RunLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw FormatError("runlog csv: expected 6 fields in '" + line + "'");
    StepRecord r;
    r.step = static_cast<std::int64_t>(parse_uint(f[0]));
    r.loss = parse_double(f[1]);
    r.grad_norm = parse_double(f[2]);
    r.epsilon = parse_double(f[3]);
    r.outlier_frac = parse_double(f[4]);
    r.spiked = parse_uint(f[5]);
    log.append(r);
  }
  return log;
}

void RunLog::write_diagnostics_csv(std::ostream& out) const {
  out << "step,param_name,epsilon,outlier_fraction,outlier_mass_ratio\n";
  for (const auto& d : diagnostics) {
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", d.step, d.param_name, d.epsilon, d.outlier_fraction,
                       d.outlier_mass_ratio);
  }
}

RunLog run_experiment(const Task& task, ExperimentConfig config, const NoiseInjector& noise) {
  if (config.steps < 1) throw InvalidArgument("run_experiment: steps must be >= 1");
  std::vector<Parameter> params = task.initial_parameters();
  std::vector<ParamSpec> specs;
  specs.reserve(params.size());
  for (const auto& p : params) specs.push_back(p.spec);

  Optimizer optimizer(config.optimizer, specs);
  if (config.capture) optimizer.enable_capture(std::move(*config.capture));
  NoiseStream stream(noise, config.seed);

  RunLog log;
  const auto diverged = [](double loss) { return !std::isfinite(loss) || loss > kDivergenceLoss; };

  for (std::int64_t step = 1; step <= config.steps; ++step) {
    StepRecord record;
    record.step = step;
    record.loss = task.loss(params);
    if (diverged(record.loss)) {
      log.summary.diverged = true;
      log.summary.final_loss = std::isnan(record.loss) ? std::numeric_limits<double>::infinity() : record.loss;
      log.append(record);
      return log;
    }

    std::vector<DenseMatrix> grads = task.gradients(params);
    record.spiked = stream.apply(grads);
    if (record.spiked > 0) log.summary.spike_steps.push_back(step);
    double norm_sq = 0.0;
    bool finite = true;
    for (const auto& g : grads) {
      norm_sq += frobenius_norm(g) * frobenius_norm(g);
      finite = finite && g.all_finite();
    }
    record.grad_norm = std::sqrt(norm_sq);
    if (!finite) {
      log.summary.diverged = true;
      log.summary.final_loss = std::numeric_limits<double>::infinity();
      log.append(record);
      return log;
    }

    const auto reports = optimizer.step(params, grads, config.schedule.multiplier(step));

    int root_params = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (config.optimizer.kind != OptimizerKind::Root || optimizer.route(i) != Route::Matrix) continue;
      ++root_params;
      record.epsilon += reports[i].epsilon;
      record.outlier_frac += reports[i].outlier_fraction;
      if (config.record_diagnostics) {
        log.diagnostics.push_back({step, params[i].spec.name, reports[i].epsilon, reports[i].outlier_fraction,
                                   reports[i].outlier_mass_ratio});
      }
    }
    if (root_params > 0) {
      record.epsilon /= root_params;
      record.outlier_frac /= root_params;
    }
    log.append(record);
    log.summary.steps_completed = step;
  }

  const double final_loss = task.loss(params);
  log.summary.diverged = diverged(final_loss);
  log.summary.final_loss = std::isnan(final_loss) ? std::numeric_limits<double>::infinity() : final_loss;
  return log;
}

std::vector<OptimizerTally> ComparisonTable::tally() const {
  std::vector<OptimizerTally> out;
  const auto index_of = [&out](const std::string& name) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].optimizer == name) return i;
    }
    out.push_back({name, 0.0, 0, 0});
    return out.size() - 1;
  };

  std::vector<int> counts;
  std::vector<std::uint64_t> seeds;
  for (const auto& row : rows) {
    const std::size_t i = index_of(row.optimizer);
    counts.resize(out.size(), 0);
    out[i].mean_final_loss += row.final_loss;
    ++counts[i];
    if (row.diverged) ++out[i].diverged;
    if (std::find(seeds.begin(), seeds.end(), row.seed) == seeds.end()) seeds.push_back(row.seed);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (counts[i] > 0) out[i].mean_final_loss /= counts[i];
  }

  for (std::uint64_t seed : seeds) {
    const ComparisonRow* best = nullptr;
    for (const auto& row : rows) {
      if (row.seed != seed || row.diverged) continue;
      if (!best || row.final_loss < best->final_loss) best = &row;
    }
    if (best) ++out[index_of(best->optimizer)].wins;
  }
  return out;
}

void ComparisonTable::write_csv(std::ostream& out) const {
  out << kComparisonHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{:.17g},{}\n", r.task, r.optimizer, r.seed, r.final_loss, r.diverged ? 1 : 0);
  }
}

ComparisonTable ComparisonTable::read_csv(std::istream& in) {
  expect_header(in, kComparisonHeader);
  ComparisonTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw FormatError("comparison csv: expected 5 fields in '" + line + "'");
    ComparisonRow r;
    r.task = f[0];
    r.optimizer = f[1];
    r.seed = parse_uint(f[2]);
    r.final_loss = parse_double(f[3]);
    if (f[4] != "0" && f[4] != "1") throw FormatError("comparison csv: diverged must be 0 or 1");
    r.diverged = f[4] == "1";
    table.rows.push_back(std::move(r));
  }
  return table;
}

ComparisonTable compare_optimizers(const TaskSpec& task, std::span<const NamedOptimizer> optimizers,
                                   const NoiseInjector& noise, std::span<const std::uint64_t> seeds,
                                   std::int64_t steps, const LrSchedule& schedule) {
  if (optimizers.empty()) throw InvalidArgument("compare_optimizers: need at least one optimizer");
  if (seeds.empty()) throw InvalidArgument("compare_optimizers: need at least one seed");
  for (const auto& o : optimizers) {
    if (o.name.empty() || o.name.find(',') != std::string::npos) {
      throw InvalidArgument("compare_optimizers: optimizer names must be non-empty and comma-free");
    }
  }

  ComparisonTable table;
  for (std::uint64_t seed : seeds) {
    TaskSpec spec = task;
    spec.seed = seed;
    const auto instance = make_task(spec);
    for (const auto& named : optimizers) {
      ExperimentConfig config;
      config.optimizer = named.config;
      config.schedule = schedule;
      config.steps = steps;
      config.seed = seed;
      const RunLog log = run_experiment(*instance, config, noise);
      table.rows.push_back({instance->name(), named.name, seed, log.summary.final_loss, log.summary.diverged});
    }
  }
  return table;
}

}  // namespace rootopt
