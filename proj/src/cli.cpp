#include "ipla/cli.hpp"

#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipla/config.hpp"
#include "ipla/experiments.hpp"

namespace ipla {

namespace {

// Turns the leftover "--key value" / "--key=value" arguments into config keys.
void apply_overrides(const std::vector<std::string>& args, Config& cfg) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) {
      throw ConfigError(a, "unexpected argument '" + a + "' (overrides are --key value)");
    }
    std::string name = a.substr(2);
    std::string value;
    const auto eq = name.find('=');
    if (eq != std::string::npos) {
      value = name.substr(eq + 1);
      name = name.substr(0, eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError(name, "missing value for option '--" + name + "'");
      value = args[++i];
    }
    cfg.set_untyped(resolve_key(name), value);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inexact proximal Langevin sampling toolkit"};
  app.require_subcommand(1);
  app.footer(
      "Every configuration key can be overridden as --key value, e.g. --tau 0.05,\n"
      "--prox.solver gd or --n-steps 5000. Section prefixes may be dropped when\n"
      "the key name is unique. IPLA_OUTPUT_ROOT sets the base output directory.");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment (example1, example2, example3, theory, custom)");
  auto* theory = app.add_subcommand("theory", "Evaluate the theory constants and step-size budgets");
  auto* bench = app.add_subcommand("prox-bench", "Benchmark prox solvers against the requested accuracy");
  for (auto* sub : {run, theory, bench}) {
    sub->add_option("--config", config_path, "TOML configuration file");
    sub->allow_extras();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  CLI::App* active = run->parsed() ? run : theory->parsed() ? theory : bench;
  try {
    Config user;
    if (!config_path.empty()) user = Config::load_file(config_path);
    apply_overrides(active->remaining(), user);
    if (active == theory && !user.has("experiment")) user.set_untyped("experiment", "theory");
    if (active == bench) user.set_untyped("experiment", "prox_bench");

    Config effective;
    const ExperimentConfig cfg = resolve_config(user, &effective);
    const RunReport report =
        active == bench ? run_prox_bench(cfg, effective, out) : run_experiment(cfg, effective, out);
    out << "outputs written to " << report.output_dir << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what();
    if (e.line() > 0) err << " (line " << e.line() << ")";
    err << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ipla
