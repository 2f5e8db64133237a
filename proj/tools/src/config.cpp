#include "rootopt_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "rootopt/errors.hpp"

namespace rootopt::cli {
namespace {

// Strict view over one JSON object: typed lookups with defaults, and a final
// check that every key present was consumed.
class Obj {
 public:
  Obj(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(fmt::format("{}: missing required key '{}'", where_, key));
    return convert<T>(key);
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where_, key));
    }
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", where_, key, e.what()));
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::vector<ShapeKey> parse_shapes(Obj& o) {
  const Json& list = o.at("shapes");
  check(list.is_array(), o.path("shapes") + ": expected a list of [rows, cols]");
  std::vector<ShapeKey> shapes;
  for (const auto& item : list) {
    check(item.is_array() && item.size() == 2 && item[0].is_number_unsigned() && item[1].is_number_unsigned(),
          o.path("shapes") + ": each shape must be [rows, cols] with positive integers");
    const ShapeKey s{item[0].get<std::size_t>(), item[1].get<std::size_t>()};
    check(s.rows > 0 && s.cols > 0, o.path("shapes") + ": dimensions must be positive");
    shapes.push_back(s);
  }
  check(!shapes.empty(), o.path("shapes") + ": at least one shape is required");
  return shapes;
}

Json shapes_json(const std::vector<ShapeKey>& shapes) {
  Json out = Json::array();
  for (const auto& s : shapes) out.push_back({s.rows, s.cols});
  return out;
}

std::vector<std::filesystem::path> parse_paths(Obj& o, const std::string& key) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : o.get<std::vector<std::string>>(key, {})) out.emplace_back(p);
  return out;
}

Json paths_json(const std::vector<std::filesystem::path>& paths) {
  Json out = Json::array();
  for (const auto& p : paths) out.push_back(p.generic_string());
  return out;
}

NsCoefficients parse_coefficients(const Json& j, const std::string& where, NsCoefficients fallback) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "muon") return kMuonCoefficients;
    if (name == "classic") return kClassicQuintic;
    throw ConfigError(where + ": unknown coefficient preset '" + name + "' (use muon, classic or {a, b, c})");
  }
  Obj o(j, where);
  NsCoefficients k{o.get("a", fallback.a), o.get("b", fallback.b), o.get("c", fallback.c),
                   o.get("iterations", fallback.iterations)};
  o.finish();
  check(std::isfinite(k.a) && std::isfinite(k.b) && std::isfinite(k.c), where + ": coefficients must be finite");
  check(k.iterations >= 1, where + ".iterations: must be >= 1");
  return k;
}

Json coefficients_json(const NsCoefficients& k) {
  return {{"a", k.a}, {"b", k.b}, {"c", k.c}, {"iterations", k.iterations}};
}

TaskSpec parse_task(const Json& j, const std::string& where) {
  Obj o(j, where);
  TaskSpec spec;
  const auto kind = o.require<std::string>("kind");
  spec.seed = o.get<std::uint64_t>("seed", 0);
  if (kind == "matrix_regression") {
    MatrixRegressionOptions d;
    spec.options = MatrixRegressionOptions{o.get("samples", d.samples), o.get("input_dim", d.input_dim),
                                           o.get("output_dim", d.output_dim), o.get("noise", d.noise)};
  } else if (kind == "factorization") {
    FactorizationOptions d;
    spec.options = FactorizationOptions{o.get("rows", d.rows), o.get("cols", d.cols), o.get("rank", d.rank),
                                        o.get("noise", d.noise), o.get("init_scale", d.init_scale)};
  } else if (kind == "tiny_mlp") {
    MlpOptions d;
    spec.options = MlpOptions{o.get("samples", d.samples), o.get("input_dim", d.input_dim),
                              o.get("hidden", d.hidden), o.get("classes", d.classes)};
  } else if (kind == "tiny_attention_lm") {
    AttentionLmOptions d;
    spec.options = AttentionLmOptions{o.get("vocab", d.vocab), o.get("embed", d.embed),
                                      o.get("context", d.context), o.get("sequences", d.sequences)};
  } else {
    throw ConfigError(where + ".kind: unknown task '" + kind +
                      "' (matrix_regression, factorization, tiny_mlp, tiny_attention_lm)");
  }
  o.finish();
  return spec;
}

Json task_json(const TaskSpec& spec) {
  struct Visitor {
    Json operator()(const MatrixRegressionOptions& d) const {
      return {{"samples", d.samples}, {"input_dim", d.input_dim}, {"output_dim", d.output_dim}, {"noise", d.noise}};
    }
    Json operator()(const FactorizationOptions& d) const {
      return {{"rows", d.rows}, {"cols", d.cols}, {"rank", d.rank}, {"noise", d.noise}, {"init_scale", d.init_scale}};
    }
    Json operator()(const MlpOptions& d) const {
      return {{"samples", d.samples}, {"input_dim", d.input_dim}, {"hidden", d.hidden}, {"classes", d.classes}};
    }
    Json operator()(const AttentionLmOptions& d) const {
      return {{"vocab", d.vocab}, {"embed", d.embed}, {"context", d.context}, {"sequences", d.sequences}};
    }
  };
  Json out = {{"kind", task_kind_name(spec.options)}};
  out.update(std::visit(Visitor{}, spec.options));
  out["seed"] = spec.seed;
  return out;
}

ThresholdPolicy parse_threshold(const Json& j, const std::string& where) {
  Obj o(j, where);
  const bool q = o.has("quantile");
  const bool e = o.has("epsilon");
  check(q != e, where + ": give exactly one of 'quantile' or 'epsilon'");
  try {
    const auto policy = q ? ThresholdPolicy::quantile(o.require<double>("quantile"))
                          : ThresholdPolicy::fixed(o.require<double>("epsilon"));
    o.finish();
    return policy;
  } catch (const InvalidArgument& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
}

Json threshold_json(const ThresholdPolicy& p) {
  if (p.mode() == ThresholdPolicy::Mode::Quantile) return {{"quantile", p.value()}};
  return {{"epsilon", p.value()}};
}

std::pair<OptimizerConfig, std::optional<std::filesystem::path>> parse_optimizer(Obj& o, const std::string& where) {
  OptimizerConfig c;
  try {
    c.kind = parse_optimizer_kind(o.require<std::string>("kind"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ".kind: " + e.what());
  }
  c.lr = o.get("lr", c.lr);
  c.momentum = o.get("momentum", c.momentum);
  c.beta1 = o.get("beta1", c.beta1);
  c.beta2 = o.get("beta2", c.beta2);
  c.adam_eps = o.get("adam_eps", c.adam_eps);
  c.weight_decay = o.get("weight_decay", c.weight_decay);
  c.elementwise_lr = o.get("elementwise_lr", c.elementwise_lr);
  c.elementwise_weight_decay = o.get("elementwise_weight_decay", c.elementwise_weight_decay);
  if (o.has("coefficients")) {
    c.muon_coefficients = parse_coefficients(o.at("coefficients"), o.path("coefficients"), kMuonCoefficients);
  }
  if (o.has("threshold")) c.threshold = parse_threshold(o.at("threshold"), o.path("threshold"));
  c.rms_scale = o.get("rms_scale", c.rms_scale);
  c.scale_by_max_dim = o.get("scale_by_max_dim", c.scale_by_max_dim);
  std::optional<std::filesystem::path> table;
  if (o.has("table")) table = o.require<std::string>("table");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return {c, table};
}

Json optimizer_json(const OptimizerConfig& c, const std::optional<std::filesystem::path>& table) {
  Json out = {{"kind", to_string(c.kind)},
              {"lr", c.lr},
              {"momentum", c.momentum},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"weight_decay", c.weight_decay},
              {"elementwise_lr", c.elementwise_lr},
              {"elementwise_weight_decay", c.elementwise_weight_decay},
              {"coefficients", coefficients_json(c.muon_coefficients)},
              {"threshold", threshold_json(c.threshold)},
              {"rms_scale", c.rms_scale},
              {"scale_by_max_dim", c.scale_by_max_dim}};
  out["table"] = table ? Json(table->generic_string()) : Json(nullptr);
  return out;
}

LrSchedule parse_schedule(const Json& j, const std::string& where, std::int64_t steps) {
  Obj o(j, where);
  const auto kind = o.get<std::string>("kind", "constant");
  LrSchedule s;
  if (kind == "constant") {
    s = LrSchedule::constant();
  } else if (kind == "cosine") {
    try {
      s = LrSchedule::cosine(steps, o.get<std::int64_t>("warmup_steps", 0), o.get("final_fraction", 0.1));
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  } else {
    throw ConfigError(where + ".kind: unknown schedule '" + kind + "' (constant, cosine)");
  }
  o.finish();
  return s;
}

Json schedule_json(const LrSchedule& s) {
  if (s.kind == LrSchedule::Kind::Constant) return {{"kind", "constant"}};
  return {{"kind", "cosine"}, {"warmup_steps", s.warmup_steps}, {"final_fraction", s.final_fraction}};
}

NoiseInjector parse_noise(const Json& j, const std::string& where) {
  Obj o(j, where);
  NoiseInjector n;
  n.spike_probability = o.get("spike_probability", n.spike_probability);
  n.spike_scale = o.get("spike_scale", n.spike_scale);
  if (o.has("heavy_tail_df")) n.heavy_tail_df = o.require<double>("heavy_tail_df");
  n.seed = o.get("seed", n.seed);
  o.finish();
  try {
    n.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return n;
}

Json noise_json(const NoiseInjector& n) {
  Json out = {{"spike_probability", n.spike_probability}, {"spike_scale", n.spike_scale}};
  out["heavy_tail_df"] = n.heavy_tail_df ? Json(*n.heavy_tail_df) : Json(nullptr);
  out["seed"] = n.seed;
  return out;
}

std::int64_t parse_steps(Obj& o, std::int64_t fallback) {
  const auto steps = o.get<std::int64_t>("steps", fallback);
  check(steps >= 1, o.path("steps") + ": must be >= 1");
  return steps;
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

CalibrateConfig parse_calibrate(const Json& j) {
  Obj o(j, "calibrate");
  CalibrateConfig c;
  c.shapes = parse_shapes(o);
  auto& k = c.calibration;
  k.iterations = o.get("iterations", k.iterations);
  k.steps = o.get("steps", k.steps);
  k.step_size = o.get("step_size", k.step_size);
  k.seed = o.get("seed", k.seed);
  k.synthetic_samples = o.get("synthetic_samples", k.synthetic_samples);
  if (o.has("init")) k.init = parse_coefficients(o.at("init"), o.path("init"), kMuonCoefficients);
  if (o.has("mix")) {
    const auto mix = o.require<std::vector<unsigned>>("mix");
    check(mix.size() == 2 && mix[0] + mix[1] >= 1, o.path("mix") + ": expected [captured_parts, synthetic_parts]");
    k.mix = {mix[0], mix[1]};
  }
  c.captured = parse_paths(o, "captured");
  o.finish();
  check(k.iterations >= 1, "calibrate.iterations: must be >= 1");
  check(k.steps >= 1, "calibrate.steps: must be >= 1");
  check(k.step_size > 0.0, "calibrate.step_size: must be > 0");
  check(k.synthetic_samples >= 1, "calibrate.synthetic_samples: must be >= 1");
  k.init.iterations = k.iterations;
  return c;
}

Json to_json(const CalibrateConfig& c) {
  const auto& k = c.calibration;
  return {{"shapes", shapes_json(c.shapes)},
          {"iterations", k.iterations},
          {"mix", {k.mix.captured_parts, k.mix.synthetic_parts}},
          {"steps", k.steps},
          {"step_size", k.step_size},
          {"init", coefficients_json(k.init)},
          {"seed", k.seed},
          {"synthetic_samples", k.synthetic_samples},
          {"captured", paths_json(c.captured)}};
}

BenchOrthConfig parse_bench_orth(const Json& j) {
  Obj o(j, "bench-orth");
  BenchOrthConfig c;
  c.shapes = parse_shapes(o);
  c.samples = o.get("samples", c.samples);
  c.iterations = o.get("iterations", c.iterations);
  c.seed = o.get("seed", c.seed);
  if (o.has("table")) c.table = o.require<std::string>("table");
  o.finish();
  check(c.samples >= 1, "bench-orth.samples: must be >= 1");
  check(c.iterations >= 1, "bench-orth.iterations: must be >= 1");
  return c;
}

Json to_json(const BenchOrthConfig& c) {
  Json out = {{"shapes", shapes_json(c.shapes)}, {"samples", c.samples}, {"iterations", c.iterations},
              {"seed", c.seed}};
  out["table"] = c.table ? Json(c.table->generic_string()) : Json(nullptr);
  return out;
}

GradStatsConfig parse_grad_stats(const Json& j) {
  Obj o(j, "grad-stats");
  GradStatsConfig c;
  c.dumps = parse_paths(o, "dumps");
  if (o.has("task")) {
    c.task = parse_task(o.at("task"), o.path("task"));
  } else {
    check(!c.dumps.empty(), "grad-stats: give 'dumps' or a live 'task'");
  }
  if (o.has("noise")) c.noise = parse_noise(o.at("noise"), o.path("noise"));
  c.draws = o.get("draws", c.draws);
  c.bins = o.get("bins", c.bins);
  c.range_sigmas = o.get("range_sigmas", c.range_sigmas);
  c.quantile = o.get("quantile", c.quantile);
  c.seed = o.get("seed", c.seed);
  o.finish();
  check(c.draws >= 1, "grad-stats.draws: must be >= 1");
  check(c.bins >= 1, "grad-stats.bins: must be >= 1");
  check(c.range_sigmas > 0.0, "grad-stats.range_sigmas: must be > 0");
  check(c.quantile >= 0.0 && c.quantile <= 1.0, "grad-stats.quantile: must lie in [0, 1]");
  return c;
}

Json to_json(const GradStatsConfig& c) {
  return {{"dumps", paths_json(c.dumps)}, {"task", task_json(c.task)},   {"noise", noise_json(c.noise)},
          {"draws", c.draws},             {"bins", c.bins},              {"range_sigmas", c.range_sigmas},
          {"quantile", c.quantile},       {"seed", c.seed}};
}

TrainConfig parse_train(const Json& j) {
  Obj o(j, "train");
  TrainConfig c;
  c.task = parse_task(o.at("task"), o.path("task"));
  Obj opt(o.at("optimizer"), o.path("optimizer"));
  std::tie(c.optimizer, c.table) = parse_optimizer(opt, o.path("optimizer"));
  opt.finish();
  c.steps = parse_steps(o, c.steps);
  if (o.has("schedule")) c.schedule = parse_schedule(o.at("schedule"), o.path("schedule"), c.steps);
  if (o.has("noise")) c.noise = parse_noise(o.at("noise"), o.path("noise"));
  c.seed = o.get("seed", c.seed);
  if (o.has("capture")) {
    Obj cap(o.at("capture"), o.path("capture"));
    CaptureConfig cc;
    cc.stride = cap.get("stride", cc.stride);
    cc.params = cap.get<std::vector<std::string>>("params", {});
    cap.finish();
    check(cc.stride >= 1, "train.capture.stride: must be >= 1");
    c.capture = cc;
  }
  c.diagnostics = o.get("diagnostics", c.diagnostics);
  o.finish();
  return c;
}

Json to_json(const TrainConfig& c) {
  Json out = {{"task", task_json(c.task)},
              {"optimizer", optimizer_json(c.optimizer, c.table)},
              {"steps", c.steps},
              {"schedule", schedule_json(c.schedule)},
              {"noise", noise_json(c.noise)},
              {"seed", c.seed}};
  out["capture"] = c.capture ? Json{{"stride", c.capture->stride}, {"params", c.capture->params}} : Json(nullptr);
  out["diagnostics"] = c.diagnostics;
  return out;
}

CompareConfig parse_compare(const Json& j) {
  Obj o(j, "compare");
  CompareConfig c;
  c.task = parse_task(o.at("task"), o.path("task"));
  const Json& list = o.at("optimizers");
  check(list.is_array() && !list.empty(), "compare.optimizers: expected a non-empty list");
  std::set<std::string> names;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = fmt::format("compare.optimizers[{}]", i);
    Obj item(list[i], where);
    NamedOptimizerConfig named;
    std::tie(named.config, named.table) = parse_optimizer(item, where);
    named.name = item.get<std::string>("name", to_string(named.config.kind));
    item.finish();
    check(!named.name.empty() && named.name.find_first_of(",\n\"") == std::string::npos,
          where + ".name: must be non-empty without commas, quotes or newlines");
    check(names.insert(named.name).second, where + ".name: duplicate optimizer name '" + named.name + "'");
    c.optimizers.push_back(std::move(named));
  }
  c.seeds = o.get<std::vector<std::uint64_t>>("seeds", {0});
  check(!c.seeds.empty(), "compare.seeds: at least one seed is required");
  c.steps = parse_steps(o, c.steps);
  if (o.has("schedule")) c.schedule = parse_schedule(o.at("schedule"), o.path("schedule"), c.steps);
  if (o.has("noise")) c.noise = parse_noise(o.at("noise"), o.path("noise"));
  o.finish();
  return c;
}

Json to_json(const CompareConfig& c) {
  Json opts = Json::array();
  for (const auto& n : c.optimizers) {
    Json item = {{"name", n.name}};
    item.update(optimizer_json(n.config, n.table));
    opts.push_back(std::move(item));
  }
  return {{"task", task_json(c.task)}, {"optimizers", opts},   {"seeds", c.seeds},
          {"steps", c.steps},          {"schedule", schedule_json(c.schedule)}, {"noise", noise_json(c.noise)}};
}

ReportConfig parse_report(const Json& j) {
  Obj o(j, "report");
  ReportConfig c{o.require<std::string>("source")};
  o.finish();
  return c;
}

Json to_json(const ReportConfig& c) { return {{"source", c.source.generic_string()}}; }

void override_seed(CalibrateConfig& c, std::uint64_t seed) { c.calibration.seed = seed; }
void override_seed(BenchOrthConfig& c, std::uint64_t seed) { c.seed = seed; }
void override_seed(GradStatsConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.task.seed = seed;
}
void override_seed(TrainConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.task.seed = seed;
}
void override_seed(CompareConfig& c, std::uint64_t seed) { c.seeds = {seed}; }

}  // namespace rootopt::cli
