#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sbgrad/bath.hpp"
#include "oracles.hpp"

using namespace sbgrad;
using bath::BathParams;

namespace {

// One shared damped-integral reference; the constructor precomputes the
// correlation grid, so build it once for the whole binary.
const oracle::DampedHalfFourier& damped_ref() {
  static oracle::DampedHalfFourier ref(0.01, 1.0, 0.1);
  return ref;
}

}  // namespace

TEST_CASE("bath parameter validation names the offending field") {
  BathParams p;
  CHECK_NOTHROW(bath::validate(p));

  p = BathParams{};
  p.eta = -0.1;
  CHECK_THROWS_WITH_AS(bath::validate(p), doctest::Contains("eta"),
                       std::invalid_argument);
  p = BathParams{};
  p.s_exponent = 1.0;
  CHECK_THROWS_WITH_AS(bath::validate(p), doctest::Contains("s_exponent"),
                       std::invalid_argument);
  p = BathParams{};
  p.omega_c = 0.0;
  CHECK_THROWS_WITH_AS(bath::validate(p), doctest::Contains("omega_c"),
                       std::invalid_argument);
  p = BathParams{};
  p.beta = -1.0;
  CHECK_THROWS_WITH_AS(bath::validate(p), doctest::Contains("beta"),
                       std::invalid_argument);
  p = BathParams{};
  p.beta = std::nan("");
  CHECK_THROWS_AS(bath::validate(p), std::invalid_argument);
}

TEST_CASE("spectral density values, peak location, and domain") {
  BathParams p;  // eta 0.01, s 3, wc 1
  CHECK(bath::spectral_density(1.0, p) ==
        doctest::Approx(0.01 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(bath::spectral_density(0.0, p) == 0.0);

  // peak sits at s * omega_c
  CHECK(bath::spectral_density(3.0, p) > bath::spectral_density(2.9, p));
  CHECK(bath::spectral_density(3.0, p) > bath::spectral_density(3.1, p));

  BathParams q = p;
  q.omega_c = 0.7;
  CHECK(bath::spectral_density(2.1, q) > bath::spectral_density(2.0, q));
  CHECK(bath::spectral_density(2.1, q) > bath::spectral_density(2.2, q));

  BathParams r = p;
  r.s_exponent = 2.0;
  CHECK(bath::spectral_density(1.0, r) ==
        doctest::Approx(0.01 * std::exp(-1.0)).epsilon(1e-15));

  CHECK_THROWS_AS(bath::spectral_density(-0.5, p), std::invalid_argument);
}

TEST_CASE("correlation at tau = 0 matches the mode-sum reference") {
  BathParams p;
  const auto f0 = bath::correlation(0.0, p);

  // value pinned from the independent Matsubara mode sum
  CHECK(std::abs(f0.real() - 0.40398026085797062) < 5e-13);
  CHECK(f0.imag() == 0.0);

  // tightening the quadrature tolerance must not move the answer
  const auto f0_tight = bath::correlation(0.0, p, 1e-13);
  CHECK(std::abs(f0 - f0_tight) < 5e-12);
}

TEST_CASE("correlation tracks the mode sum over time and decays") {
  BathParams p;
  for (double tau : {0.3, 1.0, 5.0, 17.0, 40.0}) {
    const auto lib = bath::correlation(tau, p);
    const auto ref =
        oracle::matsubara_correlation(tau, p.eta, p.omega_c, p.beta);
    CAPTURE(tau);
    CHECK(std::abs(lib - ref) < 1e-12);
  }

  const double f0 = std::abs(bath::correlation(0.0, p));
  CHECK(std::abs(bath::correlation(50.0, p)) < 1e-3 * f0);

  CHECK_THROWS_AS(bath::correlation(-0.1, p), std::invalid_argument);
}

TEST_CASE("asymptotic tail is consistent with the mode sum at large tau") {
  // internal consistency of the two reference implementations; the damped
  // half-Fourier oracle splices them at tau = 40
  for (double tau : {40.0, 60.0, 100.0}) {
    const auto ref = oracle::matsubara_correlation(tau, 0.01, 1.0, 0.1);
    const auto tail = oracle::tail_correlation(tau, 0.01, 1.0, 0.1);
    CAPTURE(tau);
    CHECK(std::abs(ref - tail) < 1e-9 * std::abs(ref));
  }
}

TEST_CASE("half-Fourier real part matches the damped-integral reference") {
  BathParams p;
  for (double w : {0.5, -0.5, 2.0, -2.0}) {
    const double lib = bath::half_fourier(w, p).value.real();
    const double ref = damped_ref().extrapolated(w).real();
    CAPTURE(w);
    CHECK(std::abs(lib - ref) < 1e-8 * std::abs(ref));
  }
}

TEST_CASE("half-Fourier imaginary part matches the damped-integral reference") {
  BathParams p;
  bath::HalfFourierOptions opts;
  opts.include_imag = true;
  for (double w : {0.5, -0.5, 1.0, -1.0}) {
    const double lib = bath::half_fourier(w, p, opts).value.imag();
    const double ref = damped_ref().extrapolated(w).imag();
    CAPTURE(w);
    CHECK(std::abs(lib - ref) < 1e-8 * std::abs(ref));
  }
}

TEST_CASE("detailed balance holds to machine precision") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> wdist(1e-3, 5.0);
  std::uniform_real_distribution<double> bdist(0.05, 2.0);
  std::uniform_real_distribution<double> edist(0.001, 0.1);

  for (int rep = 0; rep < 20; ++rep) {
    BathParams p;
    p.beta = bdist(rng);
    p.eta = edist(rng);
    const double w = wdist(rng) * p.omega_c;
    const double up = bath::half_fourier(w, p).value.real();
    const double down = bath::half_fourier(-w, p).value.real();
    CAPTURE(w);
    CAPTURE(p.beta);
    CHECK(up >= 0.0);
    CHECK(down >= 0.0);
    CHECK(std::abs(up / down - std::exp(-p.beta * w)) < 1e-14);
  }
}

TEST_CASE("half-Fourier at zero frequency") {
  BathParams p;
  bath::HalfFourierOptions opts;
  opts.include_imag = true;

  const auto c0 = bath::half_fourier(0.0, p, opts);
  CHECK(c0.omega == 0.0);
  // Re C(0) vanishes identically for s > 1
  CHECK(c0.value.real() == 0.0);
  // Im C(0) = -eta Gamma(s) omega_c; Gamma(3) = 2
  CHECK(std::abs(c0.value.imag() + 2.0 * p.eta * p.omega_c) <
        1e-12 * 2.0 * p.eta * p.omega_c);

  // continuity across the sign change
  const double re_up = bath::half_fourier(1e-4, p).value.real();
  const double re_dn = bath::half_fourier(-1e-4, p).value.real();
  CHECK(std::abs(re_up - re_dn) < 1e-12);
  // Im C approaches its Omega = 0 limit linearly from both sides, with
  // slope magnitude ~2 eta / beta = 0.2 at these parameters
  for (double delta : {1e-3, 1e-4}) {
    const double im_up = bath::half_fourier(delta, p, opts).value.imag();
    const double im_dn = bath::half_fourier(-delta, p, opts).value.imag();
    CAPTURE(delta);
    CHECK(std::abs(im_up - c0.value.imag()) < 0.3 * delta);
    CHECK(std::abs(im_dn - c0.value.imag()) < 0.3 * delta);
  }

  // the energy-shift part stays off unless requested
  CHECK(bath::half_fourier(0.7, p).value.imag() == 0.0);
}
