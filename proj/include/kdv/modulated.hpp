#pragma once

namespace kdv {

// Boundary-lift functions: the zero-mode lift h (mu = 0) solving
// h''' + h' = 0 with h(0)=h(L)=0, h'(L)-h'(0)=1, and the modulated lifts
// h_mu solving h''' + h' = mu h under the same boundary conditions.
struct ModulatedFunction {
    double mu = 0.0;
    double L = 0.0;
    double omega = 0.0;  // real root of w^3 + w = mu (unused for mu = 0)
};

// Zero-mode lift. Rejects L within a conditioning bound of 2 pi k.
ModulatedFunction solve_h(double L);

// Modulated lift for mu > 0. Rejects a vanishing closed-form denominator.
ModulatedFunction solve_h_mu(double mu, double L);

// d^order h / dx^order, 0 <= order <= 3.
double eval_h(const ModulatedFunction& h, double x, int order = 0);

struct BoundaryDerivs {
    double at0 = 0.0;
    double atL = 0.0;
};

BoundaryDerivs h_mu_boundary(const ModulatedFunction& h);

}  // namespace kdv
