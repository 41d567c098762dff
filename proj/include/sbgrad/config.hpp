// config.hpp: flat key = value run configuration shared by the command-line
// tool and the benchmark driver.

#ifndef SBGRAD_CONFIG_HPP
#define SBGRAD_CONFIG_HPP

#include <stdexcept>
#include <string>

#include "sbgrad/numerics.hpp"
#include "sbgrad/redfield.hpp"
#include "sbgrad/sensitivity.hpp"

namespace sbgrad::cli {

// Parse or validation failure in a configuration source. The message names
// the offending line when one is known.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ObservableKind { sigma_z, sigma_x, custom };

struct RunConfig {
  red::ModelParams params;          // free mask set by the `free` key
  num::ComplexMatrix rho0;          // defaults to the usual prepared state
  ObservableKind observable = ObservableKind::sigma_z;
  num::ComplexMatrix custom_observable;  // 2x2 Hermitian when kind is custom
  double tol_ss = 1e-12;
  double rank_tol = 1e-10;
  double fd_step = 1e-4;
  bool include_imag = false;
  sens::GradMethod grad_method = sens::GradMethod::implicit_direct;

  RunConfig();
};

// `a+bi` literals: both parts optional, a bare `i` counts as unit imaginary.
num::complexd parse_complex(const std::string& text);

// One `key = value` per line, `#` starts a comment, later keys win.
// Recognized keys: epsilon, delta, beta, eta, omega_c, s_exponent, rho0
// (4 comma-separated complex entries, row-major), observable (sigma_z,
// sigma_x, custom), observable_matrix, tol_ss, rank_tol, fd_step,
// include_imag, grad_method (direct, adjoint-ode), free (comma-separated
// parameter names, empty for none). Throws ConfigError with the line number
// on malformed input; rho0 and observable_matrix are checked for
// hermiticity and unit trace with the violated property named.
RunConfig parse_config_text(const std::string& text);

// Reads and parses a file; the path prefixes any error message.
RunConfig load_config(const std::string& path);

// The observable selected by the config as a matrix.
num::ComplexMatrix observable_matrix(const RunConfig& cfg);

// Gradient options implied by the config (tolerances, bath quadrature,
// finite-difference step).
sens::GradientOptions gradient_options(const RunConfig& cfg);

}  // namespace sbgrad::cli

#endif
