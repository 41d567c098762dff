#include "sbgrad/design.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sbgrad/redfield.hpp"
#include "sbgrad/steady.hpp"

namespace sbgrad::design {

double softplus(double x) {
  // max(x, 0) + log1p(e^{-|x|}) is exact on both tails.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) {
    throw std::domain_error("softplus_inverse: argument must be positive");
  }
  if (y > 30.0) {
    // ln(e^y - 1) = y + ln(1 - e^{-y})
    return y + std::log1p(-std::exp(-y));
  }
  return std::log(std::expm1(y));
}

double loss(double observable, double target) {
  return std::abs(observable - target);
}

double loss_gradient_factor(double observable, double target) {
  const double diff = observable - target;
  if (diff > 0.0) return 1.0;
  if (diff < 0.0) return -1.0;
  return 0.0;
}

OptimizerState adam_step(const OptimizerState& state,
                         const std::vector<double>& grads) {
  const std::size_t n = state.raw_params.size();
  if (grads.size() != n || state.m.size() != n || state.v_hat.size() != n) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw std::invalid_argument("adam_step: non-finite gradient");
    }
  }
  OptimizerState next = state;
  next.step = state.step + 1;
  const AdamHyper& h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(next.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(next.step));
  for (std::size_t i = 0; i < n; ++i) {
    next.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grads[i];
    next.v_hat[i] = h.beta2 * state.v_hat[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double m_corr = next.m[i] / bc1;
    const double v_corr = next.v_hat[i] / bc2;
    next.raw_params[i] -= h.lr * m_corr / (std::sqrt(v_corr) + h.eps_hat);
  }
  return next;
}

namespace {

// d softplus / d x
double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Observable at a degenerate point: the kernel is not one-dimensional, so
// take the fixed point the dynamics select from the maximally mixed state.
double degenerate_observable(const red::ModelParams& p,
                             const num::ComplexMatrix& obs,
                             const sens::GradientOptions& gopts,
                             Counters* counters) {
  const red::Liouvillian l = red::build_liouvillian(p, gopts.bath, counters);
  num::ComplexMatrix rho0 = num::ComplexMatrix::identity(l.dim);
  rho0 *= num::complexd(1.0 / static_cast<double>(l.dim), 0.0);
  const steady::SteadyStateResult ss = steady::integrate_to_steady(
      l, rho0, gopts.tol_ss, gopts.integrate, counters);
  return steady::expectation(obs, ss.rho_ss);
}

}  // namespace

OptimizeResult optimize(const red::ModelParams& p0, double target,
                        const num::ComplexMatrix& obs,
                        const std::vector<red::ParamId>& free_ids,
                        long iterations, unsigned long seed,
                        const OptimizeOptions& opts,
                        Counters* counters) {
  if (iterations < 0) {
    throw std::invalid_argument("optimize: iterations must be non-negative");
  }
  if (free_ids.empty()) {
    throw std::invalid_argument("optimize: no free parameters");
  }
  for (red::ParamId id : free_ids) {
    if (id != red::ParamId::epsilon && id != red::ParamId::delta) {
      throw std::invalid_argument(
          "optimize: only epsilon and delta can be free, got " +
          std::string(red::param_name(id)));
    }
  }
  if (!std::isfinite(target)) {
    throw std::invalid_argument("optimize: target must be finite");
  }

  // Canonical order, duplicates dropped; raw_params follows this order.
  std::vector<red::ParamId> ids;
  for (red::ParamId id : red::kAllParams) {
    if (std::find(free_ids.begin(), free_ids.end(), id) != free_ids.end()) {
      ids.push_back(id);
    }
  }
  const std::size_t n = ids.size();

  red::ModelParams p = p0;
  p.free_mask.fill(false);
  for (red::ParamId id : ids) {
    p.free_mask[static_cast<std::size_t>(id)] = true;
  }

  OptimizerState state;
  state.hyper = opts.hyper;
  state.raw_params.resize(n);
  state.m.assign(n, 0.0);
  state.v_hat.assign(n, 0.0);
  if (opts.init_from_p0) {
    for (std::size_t i = 0; i < n; ++i) {
      state.raw_params[i] = softplus_inverse(red::get_param(p0, ids[i]));
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(softplus_inverse(opts.init_lo),
                                                softplus_inverse(opts.init_hi));
    for (std::size_t i = 0; i < n; ++i) {
      state.raw_params[i] = dist(rng);
    }
  }

  OptimizeResult result;
  result.records.reserve(static_cast<std::size_t>(iterations) + 1);

  for (long it = 0; it <= iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      red::set_param(p, ids[i], softplus(state.raw_params[i]));
    }
    red::validate(p);

    LossRecord rec;
    rec.iteration = it;
    rec.epsilon = p.epsilon;
    rec.delta = p.delta;

    std::vector<double> grads(n, 0.0);
    try {
      const sens::GradientReport rep = sens::implicit_gradient(
          p, obs, opts.grad_method, opts.gradient, counters);
      rec.observable = rep.observable_value;
      const double factor = loss_gradient_factor(rep.observable_value, target);
      for (std::size_t i = 0; i < n; ++i) {
        grads[i] = factor * rep.entries[i].value * sigmoid(state.raw_params[i]);
      }
    } catch (const steady::DegenerateSteadyState&) {
      rec.degenerate = true;
      rec.observable =
          degenerate_observable(p, obs, opts.gradient, counters);
      // Gradients stay zero; momentum alone decides the next move.
    }
    rec.loss = loss(rec.observable, target);
    result.records.push_back(rec);

    if (it == iterations) break;
    try {
      state = adam_step(state, grads);
    } catch (const std::invalid_argument& e) {
      result.failed = true;
      result.message = e.what();
      break;
    }
  }
  return result;
}

}  // namespace sbgrad::design
