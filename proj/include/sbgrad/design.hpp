// design.hpp: inverse design of steady-state observables: Adam on
// softplus-parameterized couplings, driven by the implicit gradients.

#ifndef SBGRAD_DESIGN_HPP
#define SBGRAD_DESIGN_HPP

#include <string>
#include <vector>

#include "sbgrad/counters.hpp"
#include "sbgrad/sensitivity.hpp"

namespace sbgrad::design {

// ln(1 + e^x), overflow-safe on both tails. Maps raw optimizer coordinates
// to strictly positive physical parameters.
double softplus(double x);

// ln(e^y - 1) for y > 0; throws std::domain_error otherwise.
double softplus_inverse(double y);

// |observable - target|
double loss(double observable, double target);

// d loss / d observable: the sign of the difference, 0 at exact equality.
double loss_gradient_factor(double observable, double target);

struct AdamHyper {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

struct OptimizerState {
  long step = 0;
  std::vector<double> raw_params;
  std::vector<double> m;      // first-moment estimates
  std::vector<double> v_hat;  // second-moment estimates
  AdamHyper hyper;
};

// One bias-corrected Adam update. Throws std::invalid_argument when grads
// has the wrong length or contains a non-finite entry.
OptimizerState adam_step(const OptimizerState& state,
                         const std::vector<double>& grads);

struct LossRecord {
  long iteration = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double observable = 0.0;
  double loss = 0.0;
  // The steady state at this iterate was not unique; the observable comes
  // from the time-integrated fixed point and the step used zero gradients.
  bool degenerate = false;
};

struct OptimizeOptions {
  AdamHyper hyper;
  sens::GradientOptions gradient;
  sens::GradMethod grad_method = sens::GradMethod::implicit_direct;
  // Start from softplus_inverse of p0's values instead of drawing raw
  // coordinates uniformly from [softplus_inverse(init_lo),
  // softplus_inverse(init_hi)].
  bool init_from_p0 = false;
  double init_lo = 0.01;
  double init_hi = 0.5;
};

struct OptimizeResult {
  // One record per iteration, 0 through iterations inclusive while healthy.
  std::vector<LossRecord> records;
  // A non-finite gradient poisons the state; the run halts with the records
  // collected up to the last good iterate.
  bool failed = false;
  std::string message;
};

// Minimizes |<O>(p) - target| over the chosen free parameters (a subset of
// {epsilon, delta}, kept positive through softplus). Each iteration costs
// one steady solve and one adjoint solve. A degenerate iterate is recorded
// and skipped over rather than aborting the run.
OptimizeResult optimize(const red::ModelParams& p0, double target,
                        const num::ComplexMatrix& obs,
                        const std::vector<red::ParamId>& free_ids,
                        long iterations, unsigned long seed,
                        const OptimizeOptions& opts = {},
                        Counters* counters = nullptr);

}  // namespace sbgrad::design

#endif
