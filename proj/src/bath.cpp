#include "sbgrad/bath.hpp"

#include <cmath>
#include <stdexcept>

namespace sbgrad::bath {

namespace {

// coth(x) - 1 and coth(x) + 1 without cancellation. Writing the occupation
// factors this way is what makes detailed balance exact in half_fourier.
double cothm1(double x) { return 2.0 / std::expm1(2.0 * x); }
double cothp1(double x) { return 2.0 / (-std::expm1(-2.0 * x)); }

// Frequency integrals run over [0, kCutoffMultiple * omega_c]; beyond that
// the exponential cutoff has already suppressed g by ~e^-40.
constexpr double kCutoffMultiple = 40.0;

double imag_principal_value(double omega, const BathParams& p, double abs_tol) {
  const double w_max = kCutoffMultiple * p.omega_c;

  auto weight_minus = [&](double w) {
    return 0.5 * spectral_density(w, p) * cothm1(0.5 * p.beta * w);
  };
  auto weight_plus = [&](double w) {
    return 0.5 * spectral_density(w, p) * cothp1(0.5 * p.beta * w);
  };
  auto quad = [&](auto f, double a, double b, double tol) {
    return num::quad_adaptive([&](double w) { return complexd(f(w), 0.0); },
                              a, b, tol)
        .value.real();
  };

  if (omega == 0.0) {
    // The two poles coincide at w = 0 and combine into -g(w)/w, which is
    // regular there for s > 1.
    return quad([&](double w) { return -spectral_density(w, p) / w; },
                0.0, w_max, abs_tol);
  }

  const double pole = std::abs(omega);
  // Numerator of the singular term, and the companion term which stays
  // regular on w > 0.
  auto num_pole = [&](double w) {
    return omega > 0.0 ? weight_minus(w) : -weight_plus(w);
  };
  auto regular = [&](double w) {
    return omega > 0.0 ? -weight_plus(w) / (w + omega)
                       : weight_minus(w) / (w - omega);
  };
  auto full = [&](double w) { return num_pole(w) / (w - pole) + regular(w); };

  if (pole >= w_max) return quad(full, 0.0, w_max, abs_tol);

  const double delta = 0.5 * std::min({pole, w_max - pole, 1.0});
  const double tol = 0.25 * abs_tol;
  double v = quad(full, 0.0, pole - delta, tol);
  v += quad(full, pole + delta, w_max, tol);
  v += quad(regular, pole - delta, pole + delta, tol);
  // Principal value across the window: paired +-u evaluations cancel the
  // 1/u singularity, leaving a difference quotient that tends to 2 P'(pole).
  v += quad([&](double u) { return (num_pole(pole + u) - num_pole(pole - u)) / u; },
            0.0, delta, tol);
  return v;
}

}  // namespace

void validate(const BathParams& p) {
  if (!(p.eta >= 0.0) || !std::isfinite(p.eta))
    throw std::invalid_argument("BathParams: eta must be finite and >= 0");
  if (!(p.s_exponent > 1.0) || !std::isfinite(p.s_exponent))
    throw std::invalid_argument("BathParams: s_exponent must be > 1");
  if (!(p.omega_c > 0.0) || !std::isfinite(p.omega_c))
    throw std::invalid_argument("BathParams: omega_c must be > 0");
  if (!(p.beta > 0.0) || !std::isfinite(p.beta))
    throw std::invalid_argument("BathParams: beta must be > 0");
}

double spectral_density(double w, const BathParams& p) {
  if (w < 0.0)
    throw std::invalid_argument("spectral_density: frequency must be >= 0");
  if (w == 0.0) return 0.0;
  return p.eta * std::pow(w, p.s_exponent) *
         std::pow(p.omega_c, 1.0 - p.s_exponent) * std::exp(-w / p.omega_c);
}

complexd correlation(double tau, const BathParams& p, double abs_tol) {
  validate(p);
  if (tau < 0.0)
    throw std::invalid_argument("correlation: tau must be >= 0");
  const double w_max = kCutoffMultiple * p.omega_c;
  return num::quad_adaptive(
             [&](double w) {
               const double g = spectral_density(w, p);
               const double coth = 1.0 + cothm1(0.5 * p.beta * w);
               return complexd(g * coth * std::cos(w * tau),
                               -g * std::sin(w * tau));
             },
             0.0, w_max, abs_tol)
      .value;
}

HalfFourier half_fourier(double omega, const BathParams& p,
                         const HalfFourierOptions& opts) {
  validate(p);
  HalfFourier out;
  out.omega = omega;

  double re = 0.0;
  if (omega != 0.0) {
    const double a = std::abs(omega);
    const double occ = omega > 0.0 ? cothm1(0.5 * p.beta * a)
                                   : cothp1(0.5 * p.beta * a);
    re = 0.5 * M_PI * spectral_density(a, p) * occ;
  }

  double im = 0.0;
  if (opts.include_imag) im = imag_principal_value(omega, p, opts.abs_tol);

  out.value = complexd(re, im);
  return out;
}

}  // namespace sbgrad::bath
