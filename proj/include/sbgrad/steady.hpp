// steady.hpp: fixed points of the dissipative dynamics: adaptive time
// integration to stationarity, and a direct null-space solve used as an
// oracle and cross-check. States are lab-basis throughout.

#ifndef SBGRAD_STEADY_HPP
#define SBGRAD_STEADY_HPP

#include <stdexcept>
#include <string>

#include "sbgrad/counters.hpp"
#include "sbgrad/redfield.hpp"

namespace sbgrad::steady {

// Horizon or step budget exhausted before the residual reached tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double residual, double elapsed,
                 long step_count)
      : std::runtime_error(what),
        final_residual(residual),
        elapsed_model_time(elapsed),
        steps(step_count) {}

  double final_residual;
  double elapsed_model_time;
  long steps;
};

// The generator's kernel has dimension > 1, so "the" steady state is not
// unique (pure dephasing at delta = 0, or a decoupled bath at eta = 0).
class DegenerateSteadyState : public std::runtime_error {
 public:
  DegenerateSteadyState(const std::string& what, int dimension)
      : std::runtime_error(what), null_dimension(dimension) {}

  int null_dimension;
};

enum class Method { time_integration, null_space };

struct SteadyStateResult {
  num::ComplexMatrix rho_ss;  // lab basis
  double residual_norm = 0.0;
  double elapsed_model_time = 0.0;
  long steps = 0;
  Method method = Method::time_integration;
  // Degeneracy diagnostics. Time integration reports these instead of
  // failing: its fixed point is still well defined given the initial state.
  bool degenerate = false;
  int null_dimension = 1;
};

// What to do when the residual stops contracting and the generator turns out
// to have a multi-dimensional kernel: project the state onto the kernel along
// the conserved functionals (the infinite-time average), raise
// DegenerateSteadyState, or keep integrating until the horizon runs out.
enum class OnStall { project, error, ignore };

struct IntegrateOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 = auto, 1e-2 / ||L||_F
  double max_time = 1e9;
  long max_steps = 2000000;
  OnStall on_stall = OnStall::project;
  double rank_tol = 1e-10;
  long stall_window = 200;  // accepted steps between contraction checks
};

// Integrates dvec(rho)/dt = L vec(rho) from rho0 until ||L vec(rho)||_F <=
// tol_ss, re-Hermitizing and renormalizing the trace after every accepted
// step. Throws NonConvergence when the horizon is exhausted first.
SteadyStateResult integrate_to_steady(const red::Liouvillian& L,
                                      const num::ComplexMatrix& rho0,
                                      double tol_ss = 1e-10,
                                      const IntegrateOptions& opts = {},
                                      Counters* counters = nullptr);

// Solves {L vec(rho) = 0, Tr rho = trace_target} by min-norm least squares.
// Throws DegenerateSteadyState when the kernel dimension exceeds one.
SteadyStateResult null_space_steady(const red::Liouvillian& L,
                                    double trace_target = 1.0,
                                    double rank_tol = 1e-10,
                                    Counters* counters = nullptr);

// Re Tr[O rho].
double expectation(const num::ComplexMatrix& obs,
                   const num::ComplexMatrix& rho);

}  // namespace sbgrad::steady

#endif
