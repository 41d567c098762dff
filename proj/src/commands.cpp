#include "sbgrad/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sbgrad/sensitivity.hpp"
#include "sbgrad/steady.hpp"

namespace sbgrad::cli {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_complex(num::complexd z) {
  std::string out = fmt17(z.real());
  out += std::signbit(z.imag()) ? '-' : '+';
  out += fmt17(std::abs(z.imag()));
  out += 'i';
  return out;
}

// Keeps error text on one CSV field.
std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return out;
}

std::vector<red::ParamId> parse_free_names(const std::string& names) {
  std::vector<red::ParamId> ids;
  std::string cur;
  std::istringstream in(names);
  while (std::getline(in, cur, ',')) {
    const auto a = cur.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = cur.find_last_not_of(" \t");
    const std::string name = cur.substr(a, b - a + 1);
    const auto id = red::param_from_name(name);
    if (!id) {
      throw ConfigError("unknown parameter '" + name + "' in free list");
    }
    ids.push_back(*id);
  }
  return ids;
}

void print_state_block(std::ostream& out, const char* label,
                       const steady::SteadyStateResult& ss,
                       const num::ComplexMatrix& obs) {
  out << label << ".rho_ss =";
  for (std::size_t i = 0; i < ss.rho_ss.rows(); ++i) {
    for (std::size_t j = 0; j < ss.rho_ss.cols(); ++j) {
      out << ' ' << fmt_complex(ss.rho_ss(i, j));
    }
  }
  out << '\n';
  out << label << ".residual = " << fmt17(ss.residual_norm) << '\n';
  out << label << ".expectation = " << fmt17(steady::expectation(obs, ss.rho_ss))
      << '\n';
}

SweepRow compute_sweep_point(const RunConfig& cfg, red::ParamId param,
                             double value, Counters* counters) {
  SweepRow row;
  row.param_value = value;
  try {
    red::ModelParams p = cfg.params;
    red::set_param(p, param, value);
    p.free_mask.fill(false);
    p.free_mask[static_cast<std::size_t>(param)] = true;
    red::validate(p);

    const num::ComplexMatrix obs = observable_matrix(cfg);
    const sens::GradientOptions gopts = gradient_options(cfg);
    try {
      const sens::GradientReport rep =
          sens::implicit_gradient(p, obs, cfg.grad_method, gopts, counters);
      row.expectation = rep.observable_value;
      row.grad_implicit = rep.entries.at(0).value;
      const sens::GradientReport fd =
          sens::finite_difference_gradient(p, obs, gopts, counters);
      row.grad_fd = fd.entries.at(0).value;
    } catch (const steady::DegenerateSteadyState&) {
      // No unique fixed point here; difference the one the dynamics reach
      // from the configured initial state, and report it in both columns.
      sens::GradientOptions iopts = gopts;
      iopts.fd_method = steady::Method::time_integration;
      iopts.rho0 = cfg.rho0;
      const sens::GradientReport fd =
          sens::finite_difference_gradient(p, obs, iopts, counters);
      row.expectation = fd.observable_value;
      row.grad_fd = fd.entries.at(0).value;
      row.grad_implicit = row.grad_fd;
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = sanitize(e.what());
  }
  return row;
}

}  // namespace

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const steady::DegenerateSteadyState& e) {
    err << "error: " << e.what() << " (kernel dimension " << e.null_dimension
        << ")\n";
    return 4;
  } catch (const steady::NonConvergence& e) {
    err << "error: " << e.what() << " (residual " << e.final_residual << ")\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

void apply_thread_env() {
#ifdef _OPENMP
  const char* env = std::getenv("THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end != nullptr && *end == '\0' && n >= 1) {
    omp_set_num_threads(static_cast<int>(n));
  }
#endif
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, red::ParamId param,
                                double from, double to, long steps,
                                ExecMode mode, Counters* counters) {
  if (steps < 2) {
    throw std::invalid_argument("run_sweep: steps must be at least 2");
  }
  if (!std::isfinite(from) || !std::isfinite(to)) {
    throw std::invalid_argument("run_sweep: grid endpoints must be finite");
  }
  std::vector<SweepRow> rows(static_cast<std::size_t>(steps));
  const bool parallel = mode == ExecMode::parallel;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < steps; ++i) {
    const double value =
        (i == steps - 1)
            ? to
            : from + (to - from) * static_cast<double>(i) /
                         static_cast<double>(steps - 1);
    rows[static_cast<std::size_t>(i)] =
        compute_sweep_point(cfg, param, value, counters);
  }
  return rows;
}

std::string sweep_csv(const std::string& param_name,
                      const std::vector<SweepRow>& rows) {
  std::string out = "param_name,param_value,expectation,grad_implicit,grad_fd\n";
  for (const SweepRow& row : rows) {
    out += param_name;
    out += ',';
    out += fmt17(row.param_value);
    if (row.failed) {
      out += ",,,,";
      out += row.error;
    } else {
      out += ',';
      out += fmt17(row.expectation);
      out += ',';
      out += fmt17(row.grad_implicit);
      out += ',';
      out += fmt17(row.grad_fd);
    }
    out += '\n';
  }
  return out;
}

std::vector<SeedRun> run_optimize(const RunConfig& cfg, double target,
                                  const std::vector<red::ParamId>& free_ids,
                                  long iterations, double lr,
                                  unsigned long seeds, ExecMode mode,
                                  Counters* counters) {
  if (seeds < 1) {
    throw std::invalid_argument("run_optimize: seeds must be at least 1");
  }
  const num::ComplexMatrix obs = observable_matrix(cfg);
  design::OptimizeOptions oopts;
  oopts.hyper.lr = lr;
  oopts.gradient = gradient_options(cfg);
  oopts.grad_method = cfg.grad_method;

  std::vector<SeedRun> runs(seeds);
  const bool parallel = mode == ExecMode::parallel;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long s = 0; s < static_cast<long>(seeds); ++s) {
    SeedRun& run = runs[static_cast<std::size_t>(s)];
    run.seed = static_cast<unsigned long>(s) + 1;
    try {
      run.result = design::optimize(cfg.params, target, obs, free_ids,
                                    iterations, run.seed, oopts, counters);
      if (run.result.failed) {
        run.failed = true;
        run.error = sanitize(run.result.message);
      }
    } catch (const std::exception& e) {
      run.failed = true;
      run.error = sanitize(e.what());
    }
  }
  return runs;
}

std::string optimize_csv(const std::vector<SeedRun>& runs) {
  std::string out = "seed,iteration,epsilon,delta,expectation,loss\n";
  for (const SeedRun& run : runs) {
    for (const design::LossRecord& rec : run.result.records) {
      out += std::to_string(run.seed);
      out += ',';
      out += std::to_string(rec.iteration);
      out += ',';
      out += fmt17(rec.epsilon);
      out += ',';
      out += fmt17(rec.delta);
      out += ',';
      out += fmt17(rec.observable);
      out += ',';
      out += fmt17(rec.loss);
      out += '\n';
    }
  }
  return out;
}

int cmd_steady(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const num::ComplexMatrix obs = observable_matrix(cfg);
  bath::HalfFourierOptions bopts;
  bopts.include_imag = cfg.include_imag;
  const red::Liouvillian l = red::build_liouvillian(cfg.params, bopts);

  bool degenerate = false;
  try {
    const steady::SteadyStateResult ns =
        steady::null_space_steady(l, 1.0, cfg.rank_tol);
    print_state_block(out, "null_space", ns, obs);
  } catch (const steady::DegenerateSteadyState& e) {
    degenerate = true;
    err << "warning: steady state is not unique (kernel dimension "
        << e.null_dimension << "); reporting the fixed point reached from rho0\n";
    out << "degenerate_kernel_dimension = " << e.null_dimension << '\n';
    if (cfg.params.delta == 0.0) {
      // Populations are conserved, so the initial state decides the answer;
      // contrast with the thermal value a coupled system would relax to.
      out << "conserved_population_sigma_z = "
          << fmt17(steady::expectation(red::sigma_z(), cfg.rho0)) << '\n';
      out << "thermal_sigma_z = "
          << fmt17(-std::tanh(cfg.params.bath.beta * cfg.params.epsilon / 2.0))
          << '\n';
    }
  }

  steady::IntegrateOptions iopts;
  iopts.rank_tol = cfg.rank_tol;
  const steady::SteadyStateResult ti =
      steady::integrate_to_steady(l, cfg.rho0, cfg.tol_ss, iopts);
  print_state_block(out, "time_integration", ti, obs);
  out << "time_integration.elapsed = " << fmt17(ti.elapsed_model_time) << '\n';
  out << "time_integration.steps = " << ti.steps << '\n';
  (void)degenerate;
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& param, double from,
              double to, long steps, ExecMode mode, std::ostream& out,
              std::ostream& err) {
  const auto id = red::param_from_name(param);
  if (!id) {
    throw ConfigError("unknown sweep parameter '" + param + "'");
  }
  const std::vector<SweepRow> rows = run_sweep(cfg, *id, from, to, steps, mode);
  out << sweep_csv(red::param_name(*id), rows);
  const long failures = static_cast<long>(
      std::count_if(rows.begin(), rows.end(),
                    [](const SweepRow& r) { return r.failed; }));
  if (failures > 0) {
    err << failures << " of " << rows.size()
        << " grid points failed; see the error column\n";
  }
  return 0;
}

int cmd_grad(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Counters counters;
  const num::ComplexMatrix obs = observable_matrix(cfg);
  const sens::GradientReport rep = sens::implicit_gradient(
      cfg.params, obs, cfg.grad_method, gradient_options(cfg), &counters);

  const char* method_name =
      cfg.grad_method == sens::GradMethod::adjoint_ode ? "adjoint-ode"
                                                       : "direct";
  out << "parameter,gradient,method,residual\n";
  for (const sens::GradientEntry& e : rep.entries) {
    out << red::param_name(e.id) << ',' << fmt17(e.value) << ',' << method_name
        << ',' << fmt17(e.adjoint_residual) << '\n';
  }
  err << "observable = " << fmt17(rep.observable_value) << '\n';
  err << "steady_solves = " << counters.steady_solves.load() << '\n';
  err << "adjoint_linear_solves = " << counters.adjoint_linear_solves.load()
      << '\n';
  err << "liouvillian_builds = " << counters.liouvillian_builds.load() << '\n';
  return 0;
}

int cmd_optimize(const RunConfig& cfg, double target,
                 const std::string& free_names, long iterations, double lr,
                 unsigned long seeds, ExecMode mode, std::ostream& out,
                 std::ostream& err) {
  if (!std::isfinite(target)) {
    throw ConfigError("optimize target must be finite");
  }
  if (iterations < 0) {
    throw ConfigError("optimize iterations must be non-negative");
  }
  if (!std::isfinite(lr) || lr < 0.0) {
    throw ConfigError("optimize learning rate must be non-negative");
  }
  const std::vector<red::ParamId> ids = parse_free_names(free_names);
  if (ids.empty()) {
    throw ConfigError("optimize needs at least one free parameter");
  }
  for (red::ParamId id : ids) {
    if (id != red::ParamId::epsilon && id != red::ParamId::delta) {
      throw ConfigError(std::string("optimize cannot vary '") +
                        red::param_name(id) + "' (only epsilon, delta)");
    }
  }

  const std::vector<SeedRun> runs =
      run_optimize(cfg, target, ids, iterations, lr, seeds, mode);
  out << optimize_csv(runs);

  err << "seed epsilon delta expectation loss\n";
  long failed = 0;
  for (const SeedRun& run : runs) {
    if (run.failed) {
      ++failed;
      err << run.seed << " failed: " << run.error << '\n';
      continue;
    }
    const design::LossRecord& last = run.result.records.back();
    err << run.seed << ' ' << fmt17(last.epsilon) << ' ' << fmt17(last.delta)
        << ' ' << fmt17(last.observable) << ' ' << fmt17(last.loss) << '\n';
  }
  return failed == static_cast<long>(runs.size()) ? 3 : 0;
}

}  // namespace sbgrad::cli
