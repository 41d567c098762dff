// numerics.hpp: dense complex matrices, Hermitian eigensolver, min-norm least
// squares, adaptive quadrature, and an embedded Runge-Kutta driver.
//
// Everything here is sized for the small systems this project deals in
// (dimension <= 8, Liouvillians <= 64x64); the algorithms favour accuracy and
// determinism over asymptotic speed.

#ifndef SBGRAD_NUMERICS_HPP
#define SBGRAD_NUMERICS_HPP

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbgrad::num {

using complexd = std::complex<double>;
using cvector = std::vector<complexd>;

// Dense complex matrix, row-major.
class ComplexMatrix {
public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  static ComplexMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  complexd& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const complexd& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  ComplexMatrix operator+(const ComplexMatrix& rhs) const;
  ComplexMatrix operator-(const ComplexMatrix& rhs) const;
  ComplexMatrix operator*(const ComplexMatrix& rhs) const;
  ComplexMatrix& operator+=(const ComplexMatrix& rhs);
  ComplexMatrix& operator*=(complexd scale);

  ComplexMatrix adjoint() const;
  ComplexMatrix transpose() const;

  cvector apply(const cvector& x) const;          // A x
  cvector apply_adjoint(const cvector& x) const;  // A^dagger x

  complexd trace() const;
  double frobenius_norm() const;
  double max_abs() const;
  bool is_hermitian(double tol) const;

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<complexd> data_;
};

ComplexMatrix scale(complexd a, const ComplexMatrix& m);

// Kronecker product with column-stacking convention:
// (X (x) Y)[p + rows(Y) q, r + cols(Y) s] = X(q, s) Y(p, r),
// so vec(A B C) = (C^T (x) A) vec(B) with vec index (mu, nu) -> mu + d nu.
ComplexMatrix kron(const ComplexMatrix& x, const ComplexMatrix& y);

// ---------------------------------------------------------------------------
// Hermitian eigenproblem, cyclic Jacobi.

struct EigenSystem {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // columns, phase-fixed: largest-magnitude
                                    // component of each vector is real positive
};

// Throws std::invalid_argument naming the violated check (square, Hermitian).
EigenSystem eig_hermitian(const ComplexMatrix& h, double hermiticity_tol = 1e-10);

// ---------------------------------------------------------------------------
// Singular value decomposition and min-norm least squares.
//
// The SVD is obtained from the Jacobi eigendecomposition of the augmented
// Hermitian matrix [[0, A], [A^dagger, 0]], which avoids squaring the
// condition number. Only the min(m, n) leading triples are returned.

struct SvdResult {
  ComplexMatrix u;                      // m x k, k = min(m, n)
  ComplexMatrix v;                      // n x k
  std::vector<double> singular_values;  // descending, size k
};

SvdResult svd(const ComplexMatrix& a);

// Orthonormal basis of the (right) null space { x : A x = 0 }, with the null
// threshold sigma < rank_tol * sigma_max.
std::vector<cvector> right_null_basis(const ComplexMatrix& a, double rank_tol);

struct MinNormSolution {
  cvector x;
  double residual_norm = 0.0;  // ||A x - b||_2
  std::size_t rank = 0;
  std::size_t nullity = 0;
};

// Minimum-norm least-squares solution of A x = b; singular values below
// rank_tol * sigma_max are treated as zero.
MinNormSolution solve_min_norm(const ComplexMatrix& a, const cvector& b,
                               double rank_tol = 1e-10);

// Eigenvalues of a small general (non-Hermitian) matrix via the characteristic
// polynomial (Faddeev-LeVerrier) and a Durand-Kerner root finder. Intended for
// spectra of Liouvillians at d <= 8; no eigenvectors.
std::vector<complexd> eigenvalues_dense(const ComplexMatrix& a);

// ---------------------------------------------------------------------------
// Adaptive quadrature (Gauss-Kronrod 7-15 with panel bisection).

struct QuadratureFailure : std::runtime_error {
  QuadratureFailure(const std::string& what, double lo, double hi, double err)
      : std::runtime_error(what), panel_lo(lo), panel_hi(hi), panel_error(err) {}
  double panel_lo, panel_hi, panel_error;
};

struct QuadResult {
  complexd value;
  double error_estimate = 0.0;
  std::size_t panels = 0;
};

// Integrates f over [a, b] until the summed panel error estimate drops below
// abs_tol. Throws QuadratureFailure carrying the worst panel when the panel
// budget is exhausted.
QuadResult quad_adaptive(const std::function<complexd(double)>& f, double a,
                         double b, double abs_tol, std::size_t max_panels = 20000);

// ---------------------------------------------------------------------------
// Embedded Runge-Kutta 5(4), Dormand-Prince coefficients.

struct Rk45Options {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 1e-2;
  double max_time = 1e7;          // integration horizon in model time
  std::size_t max_steps = 2000000;
};

struct Rk45Outcome {
  std::vector<double> y;
  double t = 0.0;
  std::size_t accepted_steps = 0;
  bool stop_requested = false;  // false means the horizon or step budget ran out
};

using OdeRhs = std::function<void(const std::vector<double>&, std::vector<double>&)>;
// Called after every accepted step; may mutate y in place (e.g. to restore
// structure). Returning true stops the integration.
using OdeStepCallback = std::function<bool(double, std::vector<double>&)>;

Rk45Outcome integrate_rk45(const OdeRhs& rhs, std::vector<double> y0,
                           const Rk45Options& opts, const OdeStepCallback& on_step);

// Euclidean norm helpers used across modules.
double norm2(const std::vector<double>& x);
double norm2(const cvector& x);

}  // namespace sbgrad::num

#endif
