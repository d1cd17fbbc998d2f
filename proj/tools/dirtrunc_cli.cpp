// dirtrunc: run, diagnose and integrate truncated-multinomial Dirichlet
// posterior experiments.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dirtrunc/harness/commands.hpp"

namespace {

using namespace dirtrunc::harness;

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> steps;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* c = cmd->add_option("--config", args.config, "experiment config (YAML)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "output directory")->required();
  cmd->add_option("--seed", args.seed, "master seed (overrides config)");
  cmd->add_option("--chains", args.chains, "number of chains (overrides config)");
  cmd->add_option("--steps", args.steps, "steps per chain (overrides config)");
}

ExperimentConfig resolve(const CommonArgs& args) {
  const fs::path path = args.config.empty() ? fs::path(args.out) / "config.yaml" : fs::path(args.config);
  ExperimentConfig cfg = load_config(path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.chains) cfg.chains = *args.chains;
  if (args.steps) cfg.steps = *args.steps;
  cfg.validate(path.string());
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet posterior sampling under truncated multinomial observations"};
  app.require_subcommand(1);

  CommonArgs sample_args, diagnose_args, oracle_args, experiment_args;
  std::vector<std::string> which;

  auto* sample = app.add_subcommand("sample", "run chains and write trace CSVs");
  add_common(sample, sample_args, true);
  auto* diagnose = app.add_subcommand("diagnose", "compute diagnostics from written traces");
  add_common(diagnose, diagnose_args, false);
  diagnose->add_option("--which", which, "autocorr, mpsrf and/or convergence (default: all)")
      ->delimiter(',');
  auto* oracle = app.add_subcommand("oracle", "grid-integrated posterior moments (n <= 4)");
  add_common(oracle, oracle_args, true);
  auto* experiment = app.add_subcommand("experiment", "sample, oracle (if enabled), diagnose");
  add_common(experiment, experiment_args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) {
      const auto cfg = resolve(sample_args);
      const auto r = cmd_sample(cfg, sample_args.out);
      std::cerr << "wrote " << r.manifest.string() << "\n";
    } else if (*diagnose) {
      const auto cfg = resolve(diagnose_args);
      for (const auto& p : cmd_diagnose(cfg, diagnose_args.out, DiagnoseSelection::parse(which)))
        std::cerr << "wrote " << p.string() << "\n";
    } else if (*oracle) {
      const auto cfg = resolve(oracle_args);
      const auto g = cmd_oracle(cfg, oracle_args.out);
      std::cout << "mean";
      for (double v : g.mean) std::cout << " " << format_double(v);
      std::cout << "\nlog_normalizer " << format_double(g.log_normalizer) << "\n";
    } else if (*experiment) {
      cmd_experiment(resolve(experiment_args), experiment_args.out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
