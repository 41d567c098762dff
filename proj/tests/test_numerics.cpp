#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "sbgrad/numerics.hpp"

using namespace sbgrad::num;
using namespace std::complex_literals;

namespace {

ComplexMatrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexMatrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = complexd(u(rng), u(rng));
  return a;
}

ComplexMatrix random_hermitian(std::size_t n, std::mt19937_64& rng) {
  ComplexMatrix a = random_matrix(n, n, rng);
  ComplexMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  return h;
}

cvector column(const ComplexMatrix& m, std::size_t j) {
  cvector c(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) c[i] = m(i, j);
  return c;
}

}  // namespace

TEST_CASE("matrix product and adjoint agree with hand results") {
  ComplexMatrix a(2, 2), b(2, 2);
  a(0, 0) = 1.0 + 2.0i;
  a(0, 1) = -1.0i;
  a(1, 0) = 3.0;
  a(1, 1) = 0.5 - 0.5i;
  b(0, 0) = 2.0;
  b(0, 1) = 1.0i;
  b(1, 0) = -1.0;
  b(1, 1) = 4.0;

  ComplexMatrix c = a * b;
  CHECK(std::abs(c(0, 0) - (2.0 + 5.0i)) < 1e-15);
  CHECK(std::abs(c(0, 1) - (-2.0 - 3.0i)) < 1e-15);
  CHECK(std::abs(c(1, 0) - (5.5 + 0.5i)) < 1e-15);
  CHECK(std::abs(c(1, 1) - (2.0 + 1.0i)) < 1e-15);

  ComplexMatrix ad = a.adjoint();
  CHECK(std::abs(ad(0, 1) - 3.0) < 1e-15);
  CHECK(std::abs(ad(1, 0) - 1.0i) < 1e-15);

  // <A^dagger x, y> == <x, A y>
  std::mt19937_64 rng(7);
  ComplexMatrix r = random_matrix(3, 4, rng);
  cvector x(3), y(4);
  for (auto& z : x) z = complexd(1.0, -0.5);
  for (auto& z : y) z = complexd(0.25, 2.0);
  cvector rtx = r.apply_adjoint(x);
  cvector ry = r.apply(y);
  complexd lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < 4; ++i) lhs += std::conj(rtx[i]) * y[i];
  for (std::size_t i = 0; i < 3; ++i) rhs += std::conj(x[i]) * ry[i];
  CHECK(std::abs(lhs - rhs) < 1e-13);
}

TEST_CASE("kron matches the column-stacking identity vec(ABC) = (C^T kron A) vec(B)") {
  std::mt19937_64 rng(11);
  const std::size_t d = 3;
  ComplexMatrix a = random_matrix(d, d, rng);
  ComplexMatrix b = random_matrix(d, d, rng);
  ComplexMatrix c = random_matrix(d, d, rng);
  ComplexMatrix abc = a * b * c;

  auto vec = [&](const ComplexMatrix& m) {
    cvector v(d * d);
    for (std::size_t mu = 0; mu < d; ++mu)
      for (std::size_t nu = 0; nu < d; ++nu) v[mu + d * nu] = m(mu, nu);
    return v;
  };

  cvector lhs = vec(abc);
  cvector rhs = kron(c.transpose(), a).apply(vec(b));
  for (std::size_t i = 0; i < d * d; ++i) CHECK(std::abs(lhs[i] - rhs[i]) < 1e-13);

  ComplexMatrix eye = kron(ComplexMatrix::identity(2), ComplexMatrix::identity(3));
  CHECK((eye - ComplexMatrix::identity(6)).max_abs() == 0.0);
}

TEST_CASE("eig_hermitian solves a 2x2 with a known spectrum") {
  // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
  ComplexMatrix h(2, 2);
  h(0, 0) = 1.0;
  h(0, 1) = 1.0i;
  h(1, 0) = -1.0i;
  h(1, 1) = 1.0;
  EigenSystem es = eig_hermitian(h);
  CHECK(std::abs(es.eigenvalues[0]) < 1e-15);
  CHECK(es.eigenvalues[1] == doctest::Approx(2.0));

  // Two-level Hamiltonian block: eigenvalues are +-sqrt(eps^2 + delta^2)/2.
  const double eps = 0.3, delta = 0.7;
  ComplexMatrix ham(2, 2);
  ham(0, 0) = eps / 2.0;
  ham(0, 1) = delta / 2.0;
  ham(1, 0) = delta / 2.0;
  ham(1, 1) = -eps / 2.0;
  EigenSystem e2 = eig_hermitian(ham);
  const double w = std::sqrt(eps * eps + delta * delta) / 2.0;
  CHECK(e2.eigenvalues[0] == doctest::Approx(-w).epsilon(1e-14));
  CHECK(e2.eigenvalues[1] == doctest::Approx(w).epsilon(1e-14));
}

TEST_CASE("eig_hermitian on random matrices: residuals, orthogonality, ordering, determinism") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t n = 8;
    ComplexMatrix h = random_hermitian(n, rng);
    EigenSystem es = eig_hermitian(h);

    for (std::size_t j = 0; j + 1 < n; ++j) CHECK(es.eigenvalues[j] <= es.eigenvalues[j + 1]);

    const double scale_ref = h.frobenius_norm();
    for (std::size_t j = 0; j < n; ++j) {
      cvector v = column(es.eigenvectors, j);
      cvector hv = h.apply(v);
      for (std::size_t i = 0; i < n; ++i) hv[i] -= es.eigenvalues[j] * v[i];
      CHECK(norm2(hv) < 1e-13 * scale_ref);
    }

    ComplexMatrix gram = es.eigenvectors.adjoint() * es.eigenvectors;
    CHECK((gram - ComplexMatrix::identity(n)).max_abs() < 1e-13);

    // Phase convention: the largest-magnitude component of each column is
    // real and positive.
    for (std::size_t j = 0; j < n; ++j) {
      cvector v = column(es.eigenvectors, j);
      std::size_t kmax = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (std::abs(v[i]) > std::abs(v[kmax])) kmax = i;
      CHECK(std::abs(v[kmax].imag()) < 1e-15);
      CHECK(v[kmax].real() > 0.0);
    }

    EigenSystem again = eig_hermitian(h);
    CHECK((again.eigenvectors - es.eigenvectors).max_abs() == 0.0);
  }

  ComplexMatrix bad(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS((void)eig_hermitian(bad), std::invalid_argument);
}

TEST_CASE("svd reconstructs the matrix with orthonormal factors") {
  std::mt19937_64 rng(3);
  ComplexMatrix a = random_matrix(6, 4, rng);
  SvdResult sv = svd(a);

  REQUIRE(sv.singular_values.size() == 4);
  for (std::size_t j = 0; j + 1 < 4; ++j)
    CHECK(sv.singular_values[j] >= sv.singular_values[j + 1]);
  CHECK(sv.singular_values.back() >= 0.0);

  // A == U diag(sigma) V^dagger entrywise.
  ComplexMatrix us = sv.u;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 6; ++i) us(i, j) *= sv.singular_values[j];
  ComplexMatrix rec = us * sv.v.adjoint();
  CHECK((rec - a).max_abs() < 1e-13 * a.frobenius_norm());

  CHECK((sv.u.adjoint() * sv.u - ComplexMatrix::identity(4)).max_abs() < 1e-13);
  CHECK((sv.v.adjoint() * sv.v - ComplexMatrix::identity(4)).max_abs() < 1e-13);
}

TEST_CASE("svd flags rank deficiency and right_null_basis spans the kernel") {
  std::mt19937_64 rng(5);
  // Rank-2 5x5 from two outer products.
  ComplexMatrix a(5, 5);
  for (int rep = 0; rep < 2; ++rep) {
    ComplexMatrix x = random_matrix(5, 1, rng);
    ComplexMatrix y = random_matrix(5, 1, rng);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) a(i, j) += x(i, 0) * std::conj(y(j, 0));
  }

  SvdResult sv = svd(a);
  CHECK(sv.singular_values[1] > 1e-3);
  CHECK(sv.singular_values[2] < 1e-12 * sv.singular_values[0]);

  std::vector<cvector> nb = right_null_basis(a, 1e-10);
  REQUIRE(nb.size() == 3);
  for (std::size_t p = 0; p < nb.size(); ++p) {
    CHECK(norm2(a.apply(nb[p])) < 1e-12 * sv.singular_values[0]);
    for (std::size_t q = 0; q <= p; ++q) {
      complexd dot = 0.0;
      for (std::size_t i = 0; i < 5; ++i) dot += std::conj(nb[p][i]) * nb[q][i];
      CHECK(std::abs(dot - (p == q ? 1.0 : 0.0)) < 1e-12);
    }
  }

  // Full-rank matrix: empty kernel.
  ComplexMatrix f = random_matrix(4, 4, rng);
  for (std::size_t i = 0; i < 4; ++i) f(i, i) += 3.0;
  CHECK(right_null_basis(f, 1e-10).empty());

  // Zero matrix: kernel is everything.
  CHECK(right_null_basis(ComplexMatrix(3, 3), 1e-10).size() == 3);
}

TEST_CASE("solve_min_norm on regular, singular-consistent, and inconsistent systems") {
  std::mt19937_64 rng(9);
  ComplexMatrix a = random_matrix(5, 5, rng);
  for (std::size_t i = 0; i < 5; ++i) a(i, i) += 2.0;
  cvector b(5);
  for (std::size_t i = 0; i < 5; ++i) b[i] = complexd(1.0 + double(i), -0.3);

  MinNormSolution sol = solve_min_norm(a, b);
  CHECK(sol.rank == 5);
  CHECK(sol.nullity == 0);
  CHECK(sol.residual_norm < 1e-12 * norm2(b));

  // diag(1, 0) with consistent rhs: exact solution, rank 1.
  ComplexMatrix d(2, 2);
  d(0, 0) = 1.0;
  MinNormSolution s2 = solve_min_norm(d, {1.0 + 0.0i, 0.0 + 0.0i});
  CHECK(s2.rank == 1);
  CHECK(s2.nullity == 1);
  CHECK(std::abs(s2.x[0] - 1.0) < 1e-14);
  CHECK(std::abs(s2.x[1]) < 1e-14);
  CHECK(s2.residual_norm < 1e-14);

  // Inconsistent rhs lands in the cokernel: x = 0, residual = ||b||.
  MinNormSolution s3 = solve_min_norm(d, {0.0 + 0.0i, 1.0 + 0.0i});
  CHECK(norm2(s3.x) < 1e-14);
  CHECK(s3.residual_norm == doctest::Approx(1.0));

  // Minimum-norm property: the solution has no component in the kernel.
  ComplexMatrix r(4, 4);
  ComplexMatrix g = random_matrix(4, 2, rng);
  ComplexMatrix hcoef = random_matrix(4, 2, rng);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 2; ++k) r(i, j) += g(i, k) * std::conj(hcoef(j, k));
  cvector rhs_vec = r.apply({1.0 + 0.0i, -2.0 + 0.0i, 0.5i, 0.0 + 0.0i});
  MinNormSolution s4 = solve_min_norm(r, rhs_vec);
  CHECK(s4.rank == 2);
  for (const auto& nv : right_null_basis(r, 1e-10)) {
    complexd along = 0.0;
    for (std::size_t i = 0; i < 4; ++i) along += std::conj(nv[i]) * s4.x[i];
    CHECK(std::abs(along) < 1e-12);
  }
  CHECK(s4.residual_norm < 1e-12);
}

TEST_CASE("eigenvalues_dense recovers known spectra") {
  auto sorted = [](std::vector<complexd> v) {
    std::sort(v.begin(), v.end(), [](complexd x, complexd y) {
      if (std::abs(x.real() - y.real()) > 1e-9) return x.real() < y.real();
      return x.imag() < y.imag();
    });
    return v;
  };

  // Upper triangular: spectrum is the diagonal.
  ComplexMatrix t(3, 3);
  t(0, 0) = 1.0;
  t(0, 1) = 5.0;
  t(0, 2) = 9.0;
  t(1, 1) = 2.0;
  t(1, 2) = 7.0;
  t(2, 2) = 3.0;
  auto et = sorted(eigenvalues_dense(t));
  CHECK(std::abs(et[0] - 1.0) < 1e-10);
  CHECK(std::abs(et[1] - 2.0) < 1e-10);
  CHECK(std::abs(et[2] - 3.0) < 1e-10);

  // Damped-rotation block spectrum, the shape a relaxation generator takes:
  // {0, -a, -g +- i w}.
  ComplexMatrix l(4, 4);
  l(1, 1) = -0.07;
  l(2, 2) = -0.003;
  l(2, 3) = 0.9;
  l(3, 2) = -0.9;
  l(3, 3) = -0.003;
  auto el = sorted(eigenvalues_dense(l));
  CHECK(std::abs(el[0] - (-0.07)) < 1e-11);
  CHECK(std::abs(el[1] - complexd(-0.003, -0.9)) < 1e-10);
  CHECK(std::abs(el[2] - complexd(-0.003, 0.9)) < 1e-10);
  CHECK(std::abs(el[3] - 0.0) < 1e-11);
}

TEST_CASE("quad_adaptive hits analytic integrals") {
  auto real_quad = [](auto f, double a, double b, double tol) {
    return quad_adaptive([&](double x) { return complexd(f(x), 0.0); }, a, b, tol);
  };

  QuadResult q1 = real_quad([](double x) { return x * x; }, 0.0, 1.0, 1e-12);
  CHECK(std::abs(q1.value.real() - 1.0 / 3.0) < 1e-14);

  QuadResult q2 = real_quad([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12);
  CHECK(std::abs(q2.value.real() - 2.0) < 1e-12);

  // Integrable endpoint singularity; the rule never evaluates x = 0.
  QuadResult q3 = real_quad([](double x) { return std::log(x); }, 0.0, 1.0, 1e-10);
  CHECK(std::abs(q3.value.real() + 1.0) < 1e-9);

  QuadResult q4 = real_quad([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-12);
  CHECK(std::abs(q4.value.real() - 2.0 / 3.0) < 1e-11);

  // Damped oscillation over a long window, complex-valued integrand.
  const complexd aa(-1.0, 10.0);
  QuadResult q5 = quad_adaptive([&](double x) { return std::exp(aa * x); }, 0.0, 40.0, 1e-12);
  const complexd expected = (std::exp(aa * 40.0) - 1.0) / aa;
  CHECK(std::abs(q5.value - expected) < 1e-11);

  CHECK_THROWS_AS((void)quad_adaptive([](double x) { return complexd(std::sin(1.0 / x), 0.0); },
                                      1e-6, 1.0, 1e-16, 10),
                  QuadratureFailure);
  try {
    (void)quad_adaptive([](double x) { return complexd(std::sin(1.0 / x), 0.0); }, 1e-6, 1.0,
                        1e-16, 10);
  } catch (const QuadratureFailure& qf) {
    CHECK(qf.panel_lo >= 1e-6);
    CHECK(qf.panel_hi <= 1.0);
    CHECK(qf.panel_error > 0.0);
  }
}

TEST_CASE("integrate_rk45 on decay and oscillation") {
  Rk45Options opts;
  opts.rtol = 1e-10;
  opts.atol = 1e-12;
  opts.max_time = 5.0;

  auto decay = [](const std::vector<double>& y, std::vector<double>& dy) { dy[0] = -y[0]; };
  Rk45Outcome r1 = integrate_rk45(decay, {1.0}, opts, nullptr);
  CHECK(r1.t == doctest::Approx(5.0));
  CHECK(std::abs(r1.y[0] - std::exp(-5.0)) < 1e-9);
  CHECK_FALSE(r1.stop_requested);

  auto circle = [](const std::vector<double>& y, std::vector<double>& dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  opts.max_time = 6.0 * M_PI;
  Rk45Outcome r2 = integrate_rk45(circle, {1.0, 0.0}, opts, nullptr);
  CHECK(std::abs(r2.y[0] - 1.0) < 1e-7);
  CHECK(std::abs(r2.y[1]) < 1e-7);
}

TEST_CASE("integrate_rk45 callback can stop the run and mutate the state") {
  Rk45Options opts;
  opts.max_time = 100.0;

  auto decay = [](const std::vector<double>& y, std::vector<double>& dy) {
    dy[0] = -y[0];
    dy[1] = -0.5 * y[1];
  };

  Rk45Outcome r = integrate_rk45(decay, {1.0, 1.0}, opts,
                                 [](double, std::vector<double>& y) { return y[0] <= 0.5; });
  CHECK(r.stop_requested);
  CHECK(r.y[0] <= 0.5);
  CHECK(r.t < 100.0);

  // The callback may repair the state in place after every accepted step.
  Rk45Outcome r2 = integrate_rk45(decay, {1.0, 1.0}, opts, [](double, std::vector<double>& y) {
    y[1] = 0.0;
    return false;
  });
  CHECK(r2.y[1] == 0.0);

  Rk45Options tiny = opts;
  tiny.max_steps = 3;
  Rk45Outcome r3 = integrate_rk45(decay, {1.0, 1.0}, tiny, nullptr);
  CHECK_FALSE(r3.stop_requested);
  CHECK(r3.t < 100.0);
}
