#pragma once

#include <complex>
#include <map>
#include <vector>

#include "kdv/critical_lengths.hpp"
#include "kdv/spectrum_b.hpp"

namespace kdv {

// One eigenmode of the non-self-adjoint operator A (phi(0)=phi(L)=phi'(L)=0),
// parameterized by the complex tau with i zeta = 2 tau (4 tau^2 - 1).
struct EigenmodeA {
    cplx zeta{};
    cplx tau{};
    double L = 0.0;
    cplx alpha{};    // normalization factor applied to the raw closed form
    cplx dF_at_0{};  // F'(0) of the normalized eigenfunction
};

// Characteristic function G(tau, L); zeros are the eigenvalue parameters.
// Returned as (Re, Im) of the complex analytic expression.
std::pair<double, double> char_A(double t_r, double t_i, double L);
cplx char_A_complex(cplx tau, double L);

// Damped Newton from the critical seed attached to lambda_target (a critical
// eigenvalue of the nearest critical length). Throws on non-convergence,
// reporting the last residual.
EigenmodeA eigen_near(double lambda_target, double L);

// Newton from an explicit seed (exposed for conjugate-seed verification).
EigenmodeA eigen_from_seed(cplx tau_seed, double L);

// First `count` real negative eigenvalues, ordered by |zeta| ascending.
std::vector<EigenmodeA> real_spectrum_A(double L, int count);

// d^order F / dx^order of the normalized eigenfunction.
cplx eval_F(const EigenmodeA& m, double x, int order = 0);

// Bilinear duality pairing <u, F> = int_0^L u(x) F(L-x) dx used for the
// H_A membership conditions (closed under conjugation of the mode set, so it
// spans the same constraints as the conjugated form).
cplx duality_pairing_grid(const std::vector<cplx>& u, double L, const EigenmodeA& m);

// A linear combination of B-eigenmodes, stored as coefficients by index.
struct ModeCombination {
    std::map<int, cplx> coeff;
};

struct QuasiInvariantBasis {
    double L = 0.0;
    double L0 = 0.0;
    CriticalLength critical;
    std::vector<EigenmodeA> basis_A;          // spans M_A(L)
    std::vector<ModeCombination> basis_B;     // spans M_B(L) (atom directions)
    std::vector<ModeCombination> good_dirs;   // the E_m directions inside H_B(L)
};

// Assembles M_A(L), M_B(L) and the E_m directions for L near the critical
// length `cl`. The atom coefficients are least-squares projections of the
// Type 1 eigenfunctions onto the elliptic modes.
QuasiInvariantBasis quasi_invariant_basis(double L, const CriticalLength& cl,
                                          const SpectrumB& sp);

}  // namespace kdv
