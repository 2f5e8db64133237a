#include "rootopt_cli/cli.hpp"

#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "rootopt/errors.hpp"
#include "rootopt_cli/artifacts.hpp"
#include "rootopt_cli/commands.hpp"

namespace rootopt::cli {
namespace {

struct Invocation {
  std::string config;
  std::string out;
  std::string source;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool print_config = false;
  bool plot = false;
};

void add_common(CLI::App* cmd, Invocation& inv, bool with_seed) {
  cmd->add_option("-c,--config", inv.config, "JSON config file");
  cmd->add_option("-o,--out", inv.out, "output directory");
  if (with_seed) cmd->add_option("--seed", inv.seed, "override every seed in the config");
  cmd->add_flag("--force", inv.force, "reuse a non-empty output directory");
  cmd->add_flag("--print-config", inv.print_config, "print the resolved config and exit");
  cmd->add_flag("--plot", inv.plot, "also write SVG loss curves where applicable");
}

template <typename Config>
int execute(const Invocation& inv, Config config, int (*command)(const Config&, const CommandContext&),
            std::ostream& out) {
  const Json resolved = to_json(config);
  if (inv.print_config) {
    out << resolved.dump(2) << '\n';
    return kExitOk;
  }
  if (inv.out.empty()) throw ConfigError("--out is required");
  OutputDirectory dir(inv.out, inv.force);
  write_file(dir / "config.json", resolved.dump(2) + "\n");
  return command(config, CommandContext{dir, out, inv.plot});
}

template <typename Config>
Config with_seed(Config config, const Invocation& inv) {
  if (inv.seed) override_seed(config, *inv.seed);
  return config;
}

Json config_json(const Invocation& inv) {
  if (inv.config.empty()) throw ConfigError("--config is required");
  return load_json(inv.config);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rootopt: Newton-Schulz orthogonalization, coefficient calibration and robust optimizer benchmarks"};
  app.name("rootopt");
  app.require_subcommand(1);

  Invocation inv;
  auto* calibrate = app.add_subcommand("calibrate", "fit shape-specific Newton-Schulz coefficients");
  auto* bench = app.add_subcommand("bench-orth", "compare orthogonalization strategies against the SVD polar factor");
  auto* stats = app.add_subcommand("grad-stats", "gradient distribution and outlier statistics");
  auto* train = app.add_subcommand("train", "run one optimizer on a synthetic task");
  auto* compare = app.add_subcommand("compare", "sweep optimizers over seeds on one task");
  auto* report = app.add_subcommand("report", "summarize a finished run directory as markdown");
  for (auto* cmd : {calibrate, bench, stats, train, compare}) add_common(cmd, inv, true);
  add_common(report, inv, false);
  report->add_option("--source", inv.source, "run directory to summarize (instead of a config)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "rootopt: " << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  try {
    if (calibrate->parsed()) {
      auto config = with_seed(parse_calibrate(config_json(inv)), inv);
      return execute(inv, config, &cmd_calibrate, out);
    }
    if (bench->parsed()) {
      return execute(inv, with_seed(parse_bench_orth(config_json(inv)), inv), &cmd_bench_orth, out);
    }
    if (stats->parsed()) {
      return execute(inv, with_seed(parse_grad_stats(config_json(inv)), inv), &cmd_grad_stats, out);
    }
    if (train->parsed()) {
      return execute(inv, with_seed(parse_train(config_json(inv)), inv), &cmd_train, out);
    }
    if (compare->parsed()) {
      return execute(inv, with_seed(parse_compare(config_json(inv)), inv), &cmd_compare, out);
    }
    ReportConfig config = inv.source.empty() ? parse_report(config_json(inv)) : ReportConfig{inv.source};
    return execute(inv, config, &cmd_report, out);
  } catch (const ConfigError& e) {
    err << "rootopt: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "rootopt: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoFailure& e) {
    err << "rootopt: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "rootopt: " << e.what() << '\n';
    return kExitConfig;
  } catch (const rootopt::Error& e) {
    // Remaining library errors are numeric: divergence, rank deficiency,
    // SVD non-convergence, failed gradient checks.
    err << "rootopt: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace rootopt::cli
