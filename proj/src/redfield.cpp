#include "sbgrad/redfield.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace sbgrad::red {

namespace {

num::ComplexMatrix conj_matrix(const num::ComplexMatrix& m) {
  return m.adjoint().transpose();
}

// vec index under column stacking
inline int idx(int mu, int nu, int d) { return mu + d * nu; }

}  // namespace

const char* param_name(ParamId id) {
  switch (id) {
    case ParamId::epsilon: return "epsilon";
    case ParamId::delta: return "delta";
    case ParamId::beta: return "beta";
    case ParamId::eta: return "eta";
    case ParamId::omega_c: return "omega_c";
    case ParamId::s_exponent: return "s_exponent";
  }
  throw std::invalid_argument("param_name: unknown parameter id");
}

std::optional<ParamId> param_from_name(std::string_view name) {
  for (ParamId id : kAllParams)
    if (name == param_name(id)) return id;
  return std::nullopt;
}

void validate(const ModelParams& p) {
  if (!std::isfinite(p.epsilon))
    throw std::invalid_argument("ModelParams: epsilon must be finite");
  if (!std::isfinite(p.delta))
    throw std::invalid_argument("ModelParams: delta must be finite");
  bath::validate(p.bath);
}

double get_param(const ModelParams& p, ParamId id) {
  switch (id) {
    case ParamId::epsilon: return p.epsilon;
    case ParamId::delta: return p.delta;
    case ParamId::beta: return p.bath.beta;
    case ParamId::eta: return p.bath.eta;
    case ParamId::omega_c: return p.bath.omega_c;
    case ParamId::s_exponent: return p.bath.s_exponent;
  }
  throw std::invalid_argument("get_param: unknown parameter id");
}

void set_param(ModelParams& p, ParamId id, double value) {
  switch (id) {
    case ParamId::epsilon: p.epsilon = value; return;
    case ParamId::delta: p.delta = value; return;
    case ParamId::beta: p.bath.beta = value; return;
    case ParamId::eta: p.bath.eta = value; return;
    case ParamId::omega_c: p.bath.omega_c = value; return;
    case ParamId::s_exponent: p.bath.s_exponent = value; return;
  }
  throw std::invalid_argument("set_param: unknown parameter id");
}

std::vector<ParamId> free_list(const ModelParams& p) {
  std::vector<ParamId> out;
  for (ParamId id : kAllParams)
    if (p.free_mask[std::size_t(id)]) out.push_back(id);
  return out;
}

num::ComplexMatrix sigma_z() {
  num::ComplexMatrix m(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

num::ComplexMatrix sigma_x() {
  num::ComplexMatrix m(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

num::ComplexMatrix build_hamiltonian(const ModelParams& p) {
  num::ComplexMatrix h(2, 2);
  h(0, 0) = 0.5 * p.epsilon;
  h(1, 1) = -0.5 * p.epsilon;
  h(0, 1) = 0.5 * p.delta;
  h(1, 0) = 0.5 * p.delta;
  return h;
}

num::ComplexMatrix coupling_in_eigenbasis(const num::EigenSystem& basis) {
  const auto& u = basis.eigenvectors;
  if (u.rows() != 2)
    throw std::invalid_argument(
        "coupling_in_eigenbasis: expected a two-level basis");
  return u.adjoint() * sigma_z() * u;
}

Gamma4 gamma_plus(const num::EigenSystem& basis,
                  const num::ComplexMatrix& coupling,
                  const bath::BathParams& bp,
                  const bath::HalfFourierOptions& opts) {
  const int d = int(coupling.rows());
  if (int(basis.eigenvalues.size()) != d)
    throw std::invalid_argument("gamma_plus: basis/coupling size mismatch");

  // one half-Fourier evaluation per distinct Bohr frequency
  std::map<double, complexd> cache;
  auto c_of = [&](double w) {
    auto it = cache.find(w);
    if (it == cache.end())
      it = cache.emplace(w, bath::half_fourier(w, bp, opts).value).first;
    return it->second;
  };

  Gamma4 g;
  g.dim = d;
  g.t.assign(std::size_t(d) * d * d * d, complexd(0.0, 0.0));
  for (int l = 0; l < d; ++l)
    for (int n = 0; n < d; ++n)
      for (int m = 0; m < d; ++m)
        for (int k = 0; k < d; ++k) {
          const complexd amp = coupling(l, n) * coupling(m, k);
          if (amp == complexd(0.0, 0.0)) continue;
          g.at(l, n, m, k) =
              amp * c_of(basis.eigenvalues[std::size_t(m)] -
                         basis.eigenvalues[std::size_t(k)]);
        }
  return g;
}

Gamma4 gamma_minus_from(const Gamma4& gplus) {
  const int d = gplus.dim;
  Gamma4 g;
  g.dim = d;
  g.t.assign(gplus.t.size(), complexd(0.0, 0.0));
  for (int l = 0; l < d; ++l)
    for (int n = 0; n < d; ++n)
      for (int m = 0; m < d; ++m)
        for (int k = 0; k < d; ++k)
          g.at(l, n, m, k) = std::conj(gplus.at(k, m, n, l));
  return g;
}

Gamma4 gamma_minus(const num::EigenSystem& basis,
                   const num::ComplexMatrix& coupling,
                   const bath::BathParams& bp,
                   const bath::HalfFourierOptions& opts,
                   bool independent_quadrature) {
  if (!independent_quadrature)
    return gamma_minus_from(gamma_plus(basis, coupling, bp, opts));

  const int d = int(coupling.rows());
  std::map<double, complexd> cache;
  auto c_of = [&](double w) {
    auto it = cache.find(w);
    if (it == cache.end())
      it = cache.emplace(w, bath::half_fourier(w, bp, opts).value).first;
    return it->second;
  };

  Gamma4 g;
  g.dim = d;
  g.t.assign(std::size_t(d) * d * d * d, complexd(0.0, 0.0));
  for (int l = 0; l < d; ++l)
    for (int n = 0; n < d; ++n)
      for (int m = 0; m < d; ++m)
        for (int k = 0; k < d; ++k) {
          const complexd amp = coupling(l, n) * coupling(m, k);
          if (amp == complexd(0.0, 0.0)) continue;
          g.at(l, n, m, k) =
              amp * std::conj(c_of(basis.eigenvalues[std::size_t(n)] -
                                   basis.eigenvalues[std::size_t(l)]));
        }
  return g;
}

Liouvillian build_liouvillian_from(const num::ComplexMatrix& h_sys,
                                   const num::ComplexMatrix& coupling_lab,
                                   const bath::BathParams& bp,
                                   const bath::HalfFourierOptions& opts,
                                   Counters* counters) {
  bath::validate(bp);
  if (h_sys.rows() != h_sys.cols())
    throw std::invalid_argument("build_liouvillian: Hamiltonian not square");
  if (coupling_lab.rows() != h_sys.rows() ||
      coupling_lab.cols() != h_sys.cols())
    throw std::invalid_argument(
        "build_liouvillian: coupling/Hamiltonian size mismatch");

  const int d = int(h_sys.rows());
  Liouvillian L;
  L.dim = d;
  L.basis = num::eig_hermitian(h_sys);
  const auto& u = L.basis.eigenvectors;
  const auto& e = L.basis.eigenvalues;

  L.bohr.resize(std::size_t(d) * d);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      L.bohr[std::size_t(mu * d + nu)] =
          e[std::size_t(mu)] - e[std::size_t(nu)];

  const num::ComplexMatrix s = u.adjoint() * coupling_lab * u;
  const Gamma4 gp = gamma_plus(L.basis, s, bp, opts);
  const Gamma4 gm = gamma_minus_from(gp);

  // contractions entering the two Kronecker-delta terms
  num::ComplexMatrix psum(d, d);
  num::ComplexMatrix msum(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      complexd ps(0.0, 0.0), ms(0.0, 0.0);
      for (int al = 0; al < d; ++al) {
        ps += gp.at(a, al, al, b);
        ms += gm.at(a, al, al, b);
      }
      psum(a, b) = ps;
      msum(a, b) = ms;
    }

  L.matrix = num::ComplexMatrix(d * d, d * d);
#pragma omp parallel for collapse(2) if (d >= 4)
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      for (int ka = 0; ka < d; ++ka)
        for (int la = 0; la < d; ++la) {
          complexd r = gp.at(la, nu, mu, ka) + gm.at(la, nu, mu, ka);
          if (nu == la) r -= psum(mu, ka);
          if (mu == ka) r -= msum(la, nu);
          if (mu == ka && nu == la)
            r += complexd(0.0, -L.bohr[std::size_t(mu * d + nu)]);
          L.matrix(idx(mu, nu, d), idx(ka, la, d)) = r;
        }

  // rho_lab = U rho_eig U^dag, so vec transforms with T = conj(U) kron U
  const num::ComplexMatrix t = num::kron(conj_matrix(u), u);
  L.matrix_lab = t * L.matrix * t.adjoint();

  if (counters) counters->liouvillian_builds.fetch_add(1);
  return L;
}

Liouvillian build_liouvillian(const ModelParams& p,
                              const bath::HalfFourierOptions& opts,
                              Counters* counters) {
  validate(p);
  return build_liouvillian_from(build_hamiltonian(p), sigma_z(), p.bath, opts,
                                counters);
}

num::cvector vec(const num::ComplexMatrix& m) {
  const int d = int(m.rows());
  const int cols = int(m.cols());
  num::cvector x(std::size_t(d) * std::size_t(cols));
  for (int nu = 0; nu < cols; ++nu)
    for (int mu = 0; mu < d; ++mu) x[std::size_t(idx(mu, nu, d))] = m(mu, nu);
  return x;
}

num::ComplexMatrix unvec(const num::cvector& x, int d) {
  if (x.size() != std::size_t(d) * std::size_t(d))
    throw std::invalid_argument("unvec: length does not match dimension");
  num::ComplexMatrix m(d, d);
  for (int nu = 0; nu < d; ++nu)
    for (int mu = 0; mu < d; ++mu) m(mu, nu) = x[std::size_t(idx(mu, nu, d))];
  return m;
}

num::ComplexMatrix rhs(const Liouvillian& L, const num::ComplexMatrix& rho_eig) {
  if (int(rho_eig.rows()) != L.dim || int(rho_eig.cols()) != L.dim)
    throw std::invalid_argument("rhs: state dimension mismatch");
  return unvec(L.matrix.apply(vec(rho_eig)), L.dim);
}

num::ComplexMatrix rhs_lab(const Liouvillian& L,
                           const num::ComplexMatrix& rho_lab) {
  if (int(rho_lab.rows()) != L.dim || int(rho_lab.cols()) != L.dim)
    throw std::invalid_argument("rhs_lab: state dimension mismatch");
  return unvec(L.matrix_lab.apply(vec(rho_lab)), L.dim);
}

}  // namespace sbgrad::red
