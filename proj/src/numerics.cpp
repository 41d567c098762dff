#include "sbgrad/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace sbgrad::num {

namespace {

void check_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

}  // namespace

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::operator+(const ComplexMatrix& rhs) const {
  check_same_shape(*this, rhs, "ComplexMatrix::operator+");
  ComplexMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] + rhs.data_[i];
  return out;
}

ComplexMatrix ComplexMatrix::operator-(const ComplexMatrix& rhs) const {
  check_same_shape(*this, rhs, "ComplexMatrix::operator-");
  ComplexMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] - rhs.data_[i];
  return out;
}

ComplexMatrix ComplexMatrix::operator*(const ComplexMatrix& rhs) const {
  if (cols_ != rhs.rows_)
    throw std::invalid_argument("ComplexMatrix::operator*: inner dimension mismatch");
  ComplexMatrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const complexd aik = data_[i * cols_ + k];
      if (aik == complexd(0.0, 0.0)) continue;
      const complexd* brow = &rhs.data_[k * rhs.cols_];
      complexd* orow = &out.data_[i * rhs.cols_];
      for (std::size_t j = 0; j < rhs.cols_; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
  check_same_shape(*this, rhs, "ComplexMatrix::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(complexd s) {
  for (auto& z : data_) z *= s;
  return *this;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
  return out;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

cvector ComplexMatrix::apply(const cvector& x) const {
  if (x.size() != cols_) throw std::invalid_argument("ComplexMatrix::apply: size mismatch");
  cvector y(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    complexd acc = 0.0;
    const complexd* row = &data_[i * cols_];
    for (std::size_t j = 0; j < cols_; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

cvector ComplexMatrix::apply_adjoint(const cvector& x) const {
  if (x.size() != rows_) throw std::invalid_argument("ComplexMatrix::apply_adjoint: size mismatch");
  cvector y(cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const complexd xi = x[i];
    const complexd* row = &data_[i * cols_];
    for (std::size_t j = 0; j < cols_; ++j) y[j] += std::conj(row[j]) * xi;
  }
  return y;
}

complexd ComplexMatrix::trace() const {
  complexd t = 0.0;
  const std::size_t n = std::min(rows_, cols_);
  for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

bool ComplexMatrix::is_hermitian(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i; j < cols_; ++j)
      if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
  return true;
}

ComplexMatrix scale(complexd a, const ComplexMatrix& m) {
  ComplexMatrix out = m;
  out *= a;
  return out;
}

ComplexMatrix kron(const ComplexMatrix& x, const ComplexMatrix& y) {
  ComplexMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (std::size_t q = 0; q < x.rows(); ++q)
    for (std::size_t s = 0; s < x.cols(); ++s) {
      const complexd xqs = x(q, s);
      if (xqs == complexd(0.0, 0.0)) continue;
      for (std::size_t p = 0; p < y.rows(); ++p)
        for (std::size_t r = 0; r < y.cols(); ++r)
          out(p + y.rows() * q, r + y.cols() * s) = xqs * y(p, r);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi for Hermitian matrices. Each rotation annihilates one
// off-diagonal pair exactly; sweeps repeat until the off-diagonal Frobenius
// mass is at roundoff relative to the matrix norm.

EigenSystem eig_hermitian(const ComplexMatrix& h, double hermiticity_tol) {
  const std::size_t n = h.rows();
  if (h.cols() != n) throw std::invalid_argument("eig_hermitian: matrix is not square");
  const double scale_ref = std::max(h.max_abs(), 1.0);
  if (!h.is_hermitian(hermiticity_tol * scale_ref))
    throw std::invalid_argument("eig_hermitian: matrix is not Hermitian");

  ComplexMatrix a = h;
  ComplexMatrix v = ComplexMatrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += std::norm(a(i, j));
    return std::sqrt(2.0 * s);
  };

  const double stop = 1e-15 * std::max(a.frobenius_norm(), 1e-300);
  const std::size_t max_sweeps = 60;

  for (std::size_t sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const complexd b = a(p, q);
        const double babs = std::abs(b);
        if (babs < 1e-300) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        // Unitary 2x2 factor: a diagonal phase that makes the pivot real,
        // followed by the classic symmetric Jacobi rotation.
        const complexd ph = std::conj(b) / babs;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * babs);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // Rows p and q: A <- U^dagger A.
        for (std::size_t j = 0; j < n; ++j) {
          const complexd apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - std::conj(ph) * s * aqj;
          a(q, j) = s * apj + std::conj(ph) * c * aqj;
        }
        // Columns p and q: A <- A U, and accumulate V <- V U.
        for (std::size_t i = 0; i < n; ++i) {
          const complexd aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - ph * s * aiq;
          a(i, q) = s * aip + ph * c * aiq;
          const complexd vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - ph * s * viq;
          v(i, q) = s * vip + ph * c * viq;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  // Sort ascending and fix each eigenvector's phase so that its
  // largest-magnitude component is real and positive. That makes the
  // decomposition deterministic across platforms and sweep orders.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

  EigenSystem es;
  es.eigenvalues.resize(n);
  es.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t jj = 0; jj < n; ++jj) {
    const std::size_t src = order[jj];
    es.eigenvalues[jj] = a(src, src).real();
    std::size_t kmax = 0;
    double amax = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = std::abs(v(i, src));
      if (m > amax) {
        amax = m;
        kmax = i;
      }
    }
    complexd phase = 1.0;
    if (amax > 0.0) phase = std::conj(v(kmax, src)) / amax;
    for (std::size_t i = 0; i < n; ++i) es.eigenvectors(i, jj) = phase * v(i, src);
  }
  return es;
}

// ---------------------------------------------------------------------------
// SVD through the augmented Hermitian matrix [[0, A], [A^dagger, 0]], whose
// spectrum is {+sigma_i, -sigma_i, 0...}. For sigma > 0 the eigenvector is
// (u, v)/sqrt(2), so the factors are read off directly.

namespace {

ComplexMatrix jordan_wielandt(const ComplexMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  ComplexMatrix h(m + n, m + n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      h(i, m + j) = a(i, j);
      h(m + j, i) = std::conj(a(i, j));
    }
  return h;
}

}  // namespace

SvdResult svd(const ComplexMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t k = std::min(m, n);
  const EigenSystem es = eig_hermitian(jordan_wielandt(a));

  // Largest k eigenvalues (ascending order, so take the tail reversed).
  SvdResult out;
  out.u = ComplexMatrix(m, k);
  out.v = ComplexMatrix(n, k);
  out.singular_values.resize(k);
  const double rt2 = std::sqrt(2.0);
  for (std::size_t jj = 0; jj < k; ++jj) {
    const std::size_t src = m + n - 1 - jj;
    out.singular_values[jj] = std::max(es.eigenvalues[src], 0.0);
    for (std::size_t i = 0; i < m; ++i) out.u(i, jj) = rt2 * es.eigenvectors(i, src);
    for (std::size_t i = 0; i < n; ++i) out.v(i, jj) = rt2 * es.eigenvectors(m + i, src);
  }
  return out;
}

// The eigenvectors of the augmented matrix with near-zero eigenvalue have the
// form (p, q) with A q = 0 and A^dagger p = 0, and the two halves mix freely
// under degeneracy. The q parts still span the right null space, so an
// orthonormal basis is recovered by greedy Gram-Schmidt with pivoting.
std::vector<cvector> right_null_basis(const ComplexMatrix& a, double rank_tol) {
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t k = std::min(m, n);
  const EigenSystem es = eig_hermitian(jordan_wielandt(a));

  double sigma_max = 0.0;
  for (double lam : es.eigenvalues) sigma_max = std::max(sigma_max, std::abs(lam));
  const double thresh = rank_tol * std::max(sigma_max, 1e-300);

  std::size_t rank = 0;
  for (std::size_t jj = 0; jj < k; ++jj)
    if (std::abs(es.eigenvalues[m + n - 1 - jj]) >= thresh) ++rank;
  const std::size_t nullity = n - rank;
  if (nullity == 0) return {};

  std::vector<cvector> cand;
  for (std::size_t j = 0; j < m + n; ++j) {
    if (std::abs(es.eigenvalues[j]) >= thresh) continue;
    cvector q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = es.eigenvectors(m + i, j);
    cand.push_back(std::move(q));
  }

  std::vector<cvector> basis;
  for (std::size_t picked = 0; picked < nullity; ++picked) {
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const double nn = norm2(cand[i]);
      if (nn > best_norm) {
        best_norm = nn;
        best = i;
      }
    }
    if (best_norm < 1e-8)
      throw std::runtime_error("right_null_basis: null space basis extraction failed");
    cvector w = cand[best];
    for (auto& z : w) z /= best_norm;
    cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(best));
    // Two orthogonalization passes keep the basis orthonormal to roundoff.
    for (int pass = 0; pass < 2; ++pass) {
      for (auto& c : cand) {
        complexd proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += std::conj(w[i]) * c[i];
        for (std::size_t i = 0; i < n; ++i) c[i] -= proj * w[i];
      }
    }
    basis.push_back(std::move(w));
  }
  return basis;
}

MinNormSolution solve_min_norm(const ComplexMatrix& a, const cvector& b, double rank_tol) {
  if (b.size() != a.rows()) throw std::invalid_argument("solve_min_norm: rhs size mismatch");
  const std::size_t n = a.cols();
  const SvdResult sv = svd(a);
  const double sigma_max = sv.singular_values.empty() ? 0.0 : sv.singular_values.front();
  const double thresh = rank_tol * std::max(sigma_max, 1e-300);

  MinNormSolution sol;
  sol.x.assign(n, complexd(0.0, 0.0));
  for (std::size_t jj = 0; jj < sv.singular_values.size(); ++jj) {
    const double sig = sv.singular_values[jj];
    if (sig < thresh) break;
    ++sol.rank;
    complexd coef = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) coef += std::conj(sv.u(i, jj)) * b[i];
    coef /= sig;
    for (std::size_t i = 0; i < n; ++i) sol.x[i] += coef * sv.v(i, jj);
  }
  sol.nullity = n - sol.rank;

  cvector r = a.apply(sol.x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  sol.residual_norm = norm2(r);
  return sol;
}

// ---------------------------------------------------------------------------
// Small dense spectra: characteristic polynomial by the Faddeev-LeVerrier
// recurrence, roots by the Durand-Kerner simultaneous iteration. Adequate for
// the Liouvillian sizes here (n <= 16 or so); not a general-purpose QR.

std::vector<complexd> eigenvalues_dense(const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("eigenvalues_dense: matrix is not square");
  if (n == 0) return {};
  if (n == 1) return {a(0, 0)};

  // Monic characteristic polynomial coefficients c[0..n], c[n] = 1.
  std::vector<complexd> c(n + 1, complexd(0.0, 0.0));
  c[n] = 1.0;
  ComplexMatrix mk = ComplexMatrix::identity(n);
  for (std::size_t kk = 1; kk <= n; ++kk) {
    ComplexMatrix am = a * mk;
    const complexd ck = -am.trace() / static_cast<double>(kk);
    c[n - kk] = ck;
    mk = am;
    for (std::size_t i = 0; i < n; ++i) mk(i, i) += ck;
  }

  auto poly = [&](complexd z) {
    complexd p = c[n];
    for (std::size_t j = n; j-- > 0;) p = p * z + c[j];
    return p;
  };

  // Fujiwara bound on root magnitude fixes the scale of the start circle.
  double radius = 0.0;
  for (std::size_t kk = 1; kk <= n; ++kk)
    radius = std::max(radius, 2.0 * std::pow(std::abs(c[n - kk]), 1.0 / static_cast<double>(kk)));
  radius = std::max(radius, 1e-12);

  std::vector<complexd> z(n);
  const complexd seed(0.4, 0.9);  // irrational angle, avoids symmetric stalls
  complexd w = seed;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = radius * w;
    w *= seed;
  }

  const double tol = 1e-13 * std::max(1.0, radius);
  for (std::size_t iter = 0; iter < 1000; ++iter) {
    double max_move = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      complexd denom = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      if (std::abs(denom) < 1e-290) {
        z[i] += 1e-8 * radius * seed;
        max_move = radius;
        continue;
      }
      const complexd delta = poly(z[i]) / denom;
      z[i] -= delta;
      max_move = std::max(max_move, std::abs(delta));
    }
    if (max_move <= tol) break;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Gauss-Kronrod 7-15 panels with a worst-first bisection queue. Nodes are
// interior, so integrands may be singular at the interval endpoints.

namespace {

// 15-point Kronrod abscissae (positive half) and weights; the embedded
// 7-point Gauss rule lives on nodes 1, 3, 5 and the centre.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, err;
  complexd value;
};

Panel gk15(const std::function<complexd(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const complexd fc = f(mid);
  complexd kronrod = kWgk[7] * fc;
  complexd gauss = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const complexd fsum = f(mid - half * kXgk[i]) + f(mid + half * kXgk[i]);
    kronrod += kWgk[i] * fsum;
    if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  return Panel{a, b, std::abs(kronrod - gauss), kronrod};
}

}  // namespace

QuadResult quad_adaptive(const std::function<complexd(double)>& f, double a, double b,
                         double abs_tol, std::size_t max_panels) {
  auto worse = [](const Panel& x, const Panel& y) { return x.err < y.err; };
  std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> heap(worse);

  Panel first = gk15(f, a, b);
  double total_err = first.err;
  heap.push(first);

  const double width_floor = 1e-15 * (std::abs(a) + std::abs(b) + 1.0);
  while (total_err > abs_tol) {
    Panel worst = heap.top();
    if (heap.size() >= max_panels || worst.b - worst.a < width_floor)
      throw QuadratureFailure("quad_adaptive: tolerance not reached within panel budget",
                              worst.a, worst.b, worst.err);
    heap.pop();
    total_err -= worst.err;
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gk15(f, worst.a, mid);
    Panel right = gk15(f, mid, worst.b);
    total_err += left.err + right.err;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum from the panels so the result does not carry accumulation drift.
  QuadResult out;
  out.panels = heap.size();
  out.error_estimate = 0.0;
  out.value = 0.0;
  while (!heap.empty()) {
    out.value += heap.top().value;
    out.error_estimate += heap.top().err;
    heap.pop();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with the standard PI-free step controller. The stepper
// is autonomous; time only appears in the horizon bookkeeping.

namespace {

constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
// Difference between the 5th and 4th order weights, used for the error.
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

}  // namespace

Rk45Outcome integrate_rk45(const OdeRhs& rhs, std::vector<double> y0, const Rk45Options& opts,
                           const OdeStepCallback& on_step) {
  const std::size_t n = y0.size();
  std::vector<double> y = std::move(y0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y5(n);

  Rk45Outcome out;
  double t = 0.0;
  double h = opts.initial_step;

  for (std::size_t attempts = 0; attempts < opts.max_steps; ++attempts) {
    if (t >= opts.max_time * (1.0 - 1e-14)) break;
    h = std::min(h, opts.max_time - t);
    if (h <= 1e-14 * std::max(1.0, std::abs(t))) break;  // step size underflow

    rhs(y, k1);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * kA21 * k1[i];
    rhs(ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
    rhs(ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
    rhs(ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
    rhs(ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] =
          y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] + kA65 * k5[i]);
    rhs(ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y5[i] = y[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] + kB6 * k6[i]);
    rhs(y5, k7);

    double err_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] + kE6 * k6[i] +
                            kE7 * k7[i]);
      const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err_sq += (e / sc) * (e / sc);
    }
    const double err = std::sqrt(err_sq / static_cast<double>(n));

    if (err <= 1.0) {
      t += h;
      y = y5;
      ++out.accepted_steps;
      if (on_step && on_step(t, y)) {
        out.stop_requested = true;
        break;
      }
    }
    const double fac =
        err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
    h *= fac;
  }

  out.y = std::move(y);
  out.t = t;
  return out;
}

double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double norm2(const cvector& x) {
  double s = 0.0;
  for (const auto& z : x) s += std::norm(z);
  return std::sqrt(s);
}

}  // namespace sbgrad::num
