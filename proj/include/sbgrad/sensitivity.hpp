// sensitivity.hpp: exact gradients of steady-state observables.
//
// The steady state is pinned by L(theta) vec(rho) = 0 with Tr rho = 1, so
// differentiating through the fixed point gives L drho = -(dL/dtheta) rho
// with Tr drho = 0. One adjoint solve L^dag w = nu (nu the observable
// functional, deflated against the kernel) then yields every parameter
// derivative as d<O>/dtheta = -Re <w, (dL/dtheta) vec(rho)>. The deflation
// shift is exact for any observable because the trace functional annihilates
// drho/dtheta.

#ifndef SBGRAD_SENSITIVITY_HPP
#define SBGRAD_SENSITIVITY_HPP

#include <vector>

#include "sbgrad/counters.hpp"
#include "sbgrad/redfield.hpp"
#include "sbgrad/steady.hpp"

namespace sbgrad::sens {

enum class GradMethod { implicit_direct, adjoint_ode, finite_difference };

struct GradientOptions {
  double rank_tol = 1e-10;
  // Relative step for differencing the generator itself (cheap, two builds
  // per parameter).
  double tangent_step = 1e-6;
  // Relative step for full finite differences of the observable (two steady
  // solves per parameter). Smaller steps amplify solver noise faster than
  // they cut truncation error.
  double fd_step = 1e-4;
  // Residual target for the adjoint ODE backend, relative to the functional.
  double adjoint_tol = 1e-12;
  bath::HalfFourierOptions bath;
  // How finite_difference_gradient computes each perturbed steady state.
  steady::Method fd_method = steady::Method::null_space;
  double tol_ss = 1e-12;
  steady::IntegrateOptions integrate;
  // Initial state for time-integrated solves; empty means maximally mixed.
  num::ComplexMatrix rho0;
};

struct GradientEntry {
  red::ParamId id = red::ParamId::epsilon;
  double value = 0.0;
  GradMethod method = GradMethod::implicit_direct;
  // Absolute step actually used by whichever difference stencil was involved.
  double step = 0.0;
  bool one_sided = false;
  // ||L^dag z - nu|| left by the ODE backend; zero for the direct solve.
  double adjoint_residual = 0.0;
};

struct GradientReport {
  double observable_value = 0.0;
  std::vector<GradientEntry> entries;  // free parameters in ParamId order
};

struct TangentInfo {
  double step = 0.0;
  bool one_sided = false;
};

// d(L vec(rho))/dtheta at fixed rho, lab frame: a central difference of the
// generator, falling back to a second-order forward stencil when theta - h
// leaves the parameter domain. base, when given, supplies L(theta) so the
// fallback costs the same two builds as the centered one.
num::cvector residual_param_tangent(const red::ModelParams& p, red::ParamId id,
                                    const num::ComplexMatrix& rho,
                                    const bath::HalfFourierOptions& bopts = {},
                                    double rel_step = 1e-6,
                                    const red::Liouvillian* base = nullptr,
                                    Counters* counters = nullptr,
                                    TangentInfo* info = nullptr);

// Gradient of Re Tr[O rho_ss] with respect to every free parameter of p,
// via the implicit fixed-point relation: one steady solve plus one adjoint
// solve, shared across parameters. method picks how the adjoint equation is
// solved (rank-revealing least squares, or integration of dz/ds = L^dag z -
// nu to its fixed point). Throws steady::DegenerateSteadyState when the
// steady state is not unique.
GradientReport implicit_gradient(const red::ModelParams& p,
                                 const num::ComplexMatrix& obs,
                                 GradMethod method = GradMethod::implicit_direct,
                                 const GradientOptions& opts = {},
                                 Counters* counters = nullptr);

// Reference gradient by differencing the observable itself: two steady
// solves per parameter, one-sided at domain boundaries.
GradientReport finite_difference_gradient(const red::ModelParams& p,
                                          const num::ComplexMatrix& obs,
                                          const GradientOptions& opts = {},
                                          Counters* counters = nullptr);

}  // namespace sbgrad::sens

#endif
