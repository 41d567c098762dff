// Command-line front end: steady states, parameter sweeps, gradients and
// inverse design for the dissipative two-level model.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sbgrad/commands.hpp"
#include "sbgrad/config.hpp"

namespace {

using sbgrad::cli::ConfigError;
using sbgrad::cli::ExecMode;
using sbgrad::cli::RunConfig;

RunConfig make_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return sbgrad::cli::load_config(path);
}

// Primary output goes to --out when given, stdout otherwise.
int with_output(const std::string& path,
                const std::function<int(std::ostream&)>& body) {
  if (path.empty()) {
    return body(std::cout);
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError(path + ": cannot open output file");
  }
  return body(out);
}

}  // namespace

int main(int argc, char** argv) {
  sbgrad::cli::apply_thread_env();

  CLI::App app{
      "Steady-state observables and exact parameter gradients for a "
      "two-level system with an Ohmic-family bath"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  std::string config_path;
  std::string out_path;
  bool serial = false;
  app.add_option("--config", config_path, "Path to a key = value config file")
      ->capture_default_str();
  app.add_option("--out", out_path, "Write primary output here (default stdout)");
  app.add_flag("--serial", serial, "Run grid points and seeds on one thread");

  CLI::App* steady = app.add_subcommand(
      "steady", "Solve for the stationary state and report the observable");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Observable and gradients on a parameter grid, as CSV");
  std::string sweep_param;
  double sweep_from = 0.0;
  double sweep_to = 0.0;
  long sweep_steps = 0;
  sweep->add_option("--param", sweep_param, "Parameter to sweep")->required();
  sweep->add_option("--from", sweep_from, "Grid start")->required();
  sweep->add_option("--to", sweep_to, "Grid end")->required();
  sweep->add_option("--steps", sweep_steps, "Grid size (at least 2)")
      ->required();

  CLI::App* grad = app.add_subcommand(
      "grad", "Gradients for every free parameter from one steady solve");

  CLI::App* optimize = app.add_subcommand(
      "optimize", "Tune free parameters toward a target observable value");
  double target = 0.0;
  std::string free_names = "epsilon,delta";
  long iters = 100;
  double lr = 0.1;
  unsigned long seeds = 5;
  optimize->add_option("--target", target, "Target observable value")
      ->required();
  optimize->add_option("--free", free_names,
                       "Comma-separated free parameters (epsilon, delta)")
      ->capture_default_str();
  optimize->add_option("--iters", iters, "Optimizer iterations")
      ->capture_default_str();
  optimize->add_option("--lr", lr, "Learning rate")->capture_default_str();
  optimize->add_option("--seeds", seeds, "Number of independent seeds")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  const ExecMode mode = serial ? ExecMode::serial : ExecMode::parallel;
  return sbgrad::cli::guarded(std::cerr, [&]() -> int {
    const RunConfig cfg = make_config(config_path);
    if (steady->parsed()) {
      return with_output(out_path, [&](std::ostream& out) {
        return sbgrad::cli::cmd_steady(cfg, out, std::cerr);
      });
    }
    if (sweep->parsed()) {
      return with_output(out_path, [&](std::ostream& out) {
        return sbgrad::cli::cmd_sweep(cfg, sweep_param, sweep_from, sweep_to,
                                      sweep_steps, mode, out, std::cerr);
      });
    }
    if (grad->parsed()) {
      return with_output(out_path, [&](std::ostream& out) {
        return sbgrad::cli::cmd_grad(cfg, out, std::cerr);
      });
    }
    return with_output(out_path, [&](std::ostream& out) {
      return sbgrad::cli::cmd_optimize(cfg, target, free_names, iters, lr,
                                       seeds, mode, out, std::cerr);
    });
  });
}
