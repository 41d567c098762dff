// bath.hpp: super-Ohmic spectral density, the bath correlation function, and
// the one-sided Fourier transform C(Omega) that feeds the relaxation tensor.

#ifndef SBGRAD_BATH_HPP
#define SBGRAD_BATH_HPP

#include "sbgrad/numerics.hpp"

namespace sbgrad::bath {

using num::complexd;

// Defaults follow the sweep configuration used throughout the repo:
// eta = 0.01, s = 3, omega_c = 1, beta = 0.1.
struct BathParams {
  double eta = 0.01;        // friction (squared coupling scale)
  double s_exponent = 3.0;  // Ohmicity exponent; s > 1 assumed throughout
  double omega_c = 1.0;     // cutoff frequency
  double beta = 0.1;        // inverse temperature
};

// Throws std::invalid_argument naming the offending field.
void validate(const BathParams& p);

// g(w) = eta w^s omega_c^(1 - s) exp(-w / omega_c), defined for w >= 0.
double spectral_density(double w, const BathParams& p);

// F(tau) = int_0^inf dw g(w) [coth(beta w / 2) cos(w tau) - i sin(w tau)].
// The frequency integral is cut off at 40 omega_c, where the integrand is
// ~1e-17 of its peak, and evaluated adaptively to abs_tol.
complexd correlation(double tau, const BathParams& p, double abs_tol = 1e-12);

struct HalfFourierOptions {
  bool include_imag = false;  // energy-shift part, off by default
  double abs_tol = 1e-12;     // tolerance for the principal-value quadrature
};

struct HalfFourier {
  double omega = 0.0;
  complexd value;
};

// C(Omega) = int_0^inf dtau F(tau) e^{-i Omega tau}.
//
// Swapping the tau and omega integrals under a convergence factor gives a
// delta-function (real) part and a principal-value (imaginary) part. The real
// part collapses to the closed form
//   Re C(Omega) = (pi/2) g(|Omega|) [coth(beta |Omega| / 2) - sign(Omega)],
// which is 0 at Omega = 0 for s > 1. It is evaluated through expm1 so that
// the detailed-balance ratio Re C(+O) / Re C(-O) = e^{-beta O} holds to
// machine precision. The imaginary part
//   Im C(Omega) = (1/2) PV int_0^inf dw g(w) [ (coth(beta w / 2) - 1)/(w - Omega)
//                                            - (coth(beta w / 2) + 1)/(w + Omega) ]
// is computed by symmetric-pair quadrature around the pole, and only when
// opts.include_imag is set.
HalfFourier half_fourier(double omega, const BathParams& p,
                         const HalfFourierOptions& opts = {});

}  // namespace sbgrad::bath

#endif
