// Experiment runner: dsw_cli <run|convergence|cfl-scan|decay|topology> --config FILE [--out CSV]
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dsw/harness.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverFailure = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "output CSV (default: [output] path, else stdout)");
  cmd->add_option("--threads", opts.threads, "worker threads for subdomain solves")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts.seed, "mesh perturbation seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-splitting wave propagation experiments"};
  app.require_subcommand(1);
  Options opts;
  auto* run = app.add_subcommand("run", "configured schemes at each tau, no exact solution required");
  auto* convergence = app.add_subcommand("convergence", "errors against the exact solution and against CN");
  auto* cfl = app.add_subcommand("cfl-scan", "largest stable DS step per overlap (1d)");
  auto* decay = app.add_subcommand("decay", "decay of interface data into a subdomain");
  auto* topology = app.add_subcommand("topology", "DS against CN across subdomain grids (2d)");
  for (auto* cmd : {run, convergence, cfl, decay, topology}) add_common(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    dsw::ExperimentConfig config = dsw::load_config(opts.config);
    if (opts.threads) config.threads = *opts.threads;
    if (opts.seed) config.seed = *opts.seed;
    if (!opts.out.empty()) config.output = opts.out;

    std::vector<dsw::ResultRow> rows;
    if (*run) rows = dsw::run_convergence(config, false);
    else if (*convergence) rows = dsw::run_convergence(config, true);
    else if (*cfl) rows = dsw::run_cfl_scan(config);
    else if (*decay) rows = dsw::run_decay_experiment(config);
    else rows = dsw::run_topology_sweep(config);

    if (config.output.empty()) dsw::write_csv(rows, std::cout);
    else dsw::write_csv(rows, config.output);
  } catch (const dsw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return 0;
}
