// commands.hpp: the four user-facing commands plus the shared sweep and
// multi-seed optimize drivers. Commands write their primary output (reports,
// CSV) to `out` and diagnostics to `err`, and throw on failure; guarded()
// maps exceptions to the stable exit codes.

#ifndef SBGRAD_COMMANDS_HPP
#define SBGRAD_COMMANDS_HPP

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbgrad/config.hpp"
#include "sbgrad/counters.hpp"
#include "sbgrad/design.hpp"

namespace sbgrad::cli {

enum class ExecMode { serial, parallel };

// Exit codes: 0 success, 2 configuration error, 3 solver failure,
// 4 degenerate steady state.
int guarded(std::ostream& err, const std::function<int()>& body);

// Caps OpenMP workers to the THREADS environment variable when set.
void apply_thread_env();

struct SweepRow {
  double param_value = 0.0;
  double expectation = 0.0;
  double grad_implicit = 0.0;
  double grad_fd = 0.0;
  bool failed = false;
  std::string error;
};

// Evaluates the observable and its gradient with respect to `param` on a
// uniform grid of `steps` points from `from` to `to` inclusive. Points where
// the steady state is degenerate fall back to the fixed point reached from
// the configured rho0, with both gradient columns differenced through that
// path. Other per-point failures land in the row's error field; the sweep
// always completes. Results are identical for both execution modes.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, red::ParamId param,
                                double from, double to, long steps,
                                ExecMode mode, Counters* counters = nullptr);

std::string sweep_csv(const std::string& param_name,
                      const std::vector<SweepRow>& rows);

struct SeedRun {
  unsigned long seed = 0;
  design::OptimizeResult result;
  bool failed = false;
  std::string error;
};

// Runs optimize() once per seed (1 through seeds), each seed an independent
// job. A seed that fails outright is marked and the others still complete.
std::vector<SeedRun> run_optimize(const RunConfig& cfg, double target,
                                  const std::vector<red::ParamId>& free_ids,
                                  long iterations, double lr,
                                  unsigned long seeds, ExecMode mode,
                                  Counters* counters = nullptr);

std::string optimize_csv(const std::vector<SeedRun>& runs);

int cmd_steady(const RunConfig& cfg, std::ostream& out, std::ostream& err);

int cmd_sweep(const RunConfig& cfg, const std::string& param, double from,
              double to, long steps, ExecMode mode, std::ostream& out,
              std::ostream& err);

int cmd_grad(const RunConfig& cfg, std::ostream& out, std::ostream& err);

int cmd_optimize(const RunConfig& cfg, double target,
                 const std::string& free_names, long iterations, double lr,
                 unsigned long seeds, ExecMode mode, std::ostream& out,
                 std::ostream& err);

}  // namespace sbgrad::cli

#endif
