// Benchmark: the parallel sweep driver against its serial reference.
// Verifies byte-identical CSV output, then reports wall times and speedup.

#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sbgrad/commands.hpp"
#include "sbgrad/config.hpp"

namespace {

double time_sweep(const sbgrad::cli::RunConfig& cfg, sbgrad::red::ParamId id,
                  double from, double to, long steps,
                  sbgrad::cli::ExecMode mode, int repeat, std::string* csv) {
  double best = 1e300;
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = sbgrad::cli::run_sweep(cfg, id, from, to, steps, mode);
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    *csv = sbgrad::cli::sweep_csv(sbgrad::red::param_name(id), rows);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  sbgrad::cli::apply_thread_env();

  CLI::App app{"Compare the parallel sweep against the serial reference"};
  std::string config_path;
  std::string param = "delta";
  double from = 0.05;
  double to = 1.0;
  long steps = 40;
  int repeat = 3;
  app.add_option("--config", config_path, "Config file (defaults otherwise)");
  app.add_option("--param", param, "Parameter to sweep")->capture_default_str();
  app.add_option("--from", from, "Grid start")->capture_default_str();
  app.add_option("--to", to, "Grid end")->capture_default_str();
  app.add_option("--steps", steps, "Grid size")->capture_default_str();
  app.add_option("--repeat", repeat, "Repetitions, best time wins")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  return sbgrad::cli::guarded(std::cerr, [&]() -> int {
    const sbgrad::cli::RunConfig cfg =
        config_path.empty() ? sbgrad::cli::RunConfig{}
                            : sbgrad::cli::load_config(config_path);
    const auto id = sbgrad::red::param_from_name(param);
    if (!id) {
      throw sbgrad::cli::ConfigError("unknown parameter '" + param + "'");
    }

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif

    std::string serial_csv;
    std::string parallel_csv;
    const double t_serial =
        time_sweep(cfg, *id, from, to, steps, sbgrad::cli::ExecMode::serial,
                   repeat, &serial_csv);
    const double t_parallel =
        time_sweep(cfg, *id, from, to, steps, sbgrad::cli::ExecMode::parallel,
                   repeat, &parallel_csv);

    if (serial_csv != parallel_csv) {
      std::fprintf(stderr, "serial and parallel sweeps disagree\n");
      return 3;
    }
    std::printf("grid points: %ld\n", steps);
    std::printf("threads: %d\n", threads);
    std::printf("serial:   %.6f s\n", t_serial);
    std::printf("parallel: %.6f s\n", t_parallel);
    std::printf("speedup:  %.2fx\n", t_serial / t_parallel);
    std::printf("outputs byte-identical: yes\n");
    return 0;
  });
}
