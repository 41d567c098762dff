// redfield.hpp: system Hamiltonian, Gamma transition tensors, and assembly
// of the Liouvillian superoperator L with dvec(rho)/dt = L vec(rho).
//
// Vectorization is column-stacking throughout the repo: entry (mu, nu) of a
// d x d matrix lands at flat index mu + d*nu, so vec(A B C) = (C^T kron A) vec(B).

#ifndef SBGRAD_REDFIELD_HPP
#define SBGRAD_REDFIELD_HPP

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "sbgrad/bath.hpp"
#include "sbgrad/counters.hpp"
#include "sbgrad/numerics.hpp"

namespace sbgrad::red {

using num::complexd;

// Every differentiable scalar in the model, in a fixed order shared by the
// free_mask, the CLI, and the gradient reports.
enum class ParamId { epsilon, delta, beta, eta, omega_c, s_exponent };

inline constexpr std::array<ParamId, 6> kAllParams = {
    ParamId::epsilon, ParamId::delta,   ParamId::beta,
    ParamId::eta,     ParamId::omega_c, ParamId::s_exponent};

const char* param_name(ParamId id);
std::optional<ParamId> param_from_name(std::string_view name);

struct ModelParams {
  double epsilon = 0.1;
  double delta = 0.0;
  bath::BathParams bath;
  // Indexed by ParamId; parameters marked true are exposed to the gradient
  // and optimization machinery. Defaults to all frozen.
  std::array<bool, 6> free_mask{};
};

void validate(const ModelParams& p);

double get_param(const ModelParams& p, ParamId id);
void set_param(ModelParams& p, ParamId id, double value);

// Free parameters in ParamId order.
std::vector<ParamId> free_list(const ModelParams& p);

num::ComplexMatrix sigma_z();
num::ComplexMatrix sigma_x();

// H_S = (epsilon/2) sigma_z + (delta/2) sigma_x.
num::ComplexMatrix build_hamiltonian(const ModelParams& p);

// The system side of the coupling, sigma_z, rotated into the energy
// eigenbasis: U^dag sigma_z U.
num::ComplexMatrix coupling_in_eigenbasis(const num::EigenSystem& basis);

// Rank-4 tensor of transition coefficients, flattened with the slowest index
// first: entry (l, n, m, k) at ((l*d + n)*d + m)*d + k.
struct Gamma4 {
  int dim = 0;
  num::cvector t;

  complexd& at(int l, int n, int m, int k) {
    return t[std::size_t(((l * dim + n) * dim + m) * dim + k)];
  }
  complexd at(int l, int n, int m, int k) const {
    return t[std::size_t(((l * dim + n) * dim + m) * dim + k)];
  }
};

// Gamma+_{l,n,m,k} = <l|A|n><m|A|k> C(omega_{m,k}), with A the coupling in
// the eigenbasis and C the half-Fourier transform of the bath correlation.
// Each distinct Bohr frequency is transformed once and cached.
Gamma4 gamma_plus(const num::EigenSystem& basis,
                  const num::ComplexMatrix& coupling,
                  const bath::BathParams& bp,
                  const bath::HalfFourierOptions& opts = {});

// Gamma-_{l,n,m,k} = <l|A|n><m|A|k> conj(C(omega_{n,l})). By default this is
// taken from Gamma+ through the identity Gamma-_{l,n,m,k} =
// conj(Gamma+_{k,m,n,l}), which halves the bath-integral cost and enforces
// the relation by construction; independent_quadrature re-evaluates the
// transforms instead and exists for testing that identity.
Gamma4 gamma_minus(const num::EigenSystem& basis,
                   const num::ComplexMatrix& coupling,
                   const bath::BathParams& bp,
                   const bath::HalfFourierOptions& opts = {},
                   bool independent_quadrature = false);

Gamma4 gamma_minus_from(const Gamma4& gplus);

struct Liouvillian {
  int dim = 0;
  // Generator in the eigenbasis of H_S (column-stacking indices).
  num::ComplexMatrix matrix;
  // The same generator conjugated back to the lab basis, so states never
  // have to be rotated when parameters (and hence eigenbases) change.
  num::ComplexMatrix matrix_lab;
  num::EigenSystem basis;
  // Bohr frequencies omega_{mu,nu} = E_mu - E_nu, row-major.
  std::vector<double> bohr;
};

// Assembles L[(mu,nu),(kappa,lambda)] = -i omega_{mu,nu} delta delta +
// R_{mu,nu,kappa,lambda} with the Redfield tensor
//   R = Gamma+_{l,n,m,k} + Gamma-_{l,n,m,k}
//       - delta_{n,l} sum_a Gamma+_{m,a,a,k} - delta_{m,k} sum_a Gamma-_{l,a,a,n}.
// Works for any dimension; the spin-boson entry point below fixes d = 2.
Liouvillian build_liouvillian_from(const num::ComplexMatrix& h_sys,
                                   const num::ComplexMatrix& coupling_lab,
                                   const bath::BathParams& bp,
                                   const bath::HalfFourierOptions& opts = {},
                                   Counters* counters = nullptr);

Liouvillian build_liouvillian(const ModelParams& p,
                              const bath::HalfFourierOptions& opts = {},
                              Counters* counters = nullptr);

// Column-stacking vec and its inverse.
num::cvector vec(const num::ComplexMatrix& m);
num::ComplexMatrix unvec(const num::cvector& x, int d);

// drho/dt for a state expressed in the eigenbasis carried by L.
num::ComplexMatrix rhs(const Liouvillian& L, const num::ComplexMatrix& rho_eig);

// Same generator acting on a lab-basis state.
num::ComplexMatrix rhs_lab(const Liouvillian& L,
                           const num::ComplexMatrix& rho_lab);

}  // namespace sbgrad::red

#endif
