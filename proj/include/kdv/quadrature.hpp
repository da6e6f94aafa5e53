#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace kdv {

using cplx = std::complex<double>;

// Composite Simpson over uniformly sampled values (size must be odd).
double simpson(std::span<const double> f, double dx);
cplx simpson(std::span<const cplx> f, double dx);

// Composite Simpson of a callable on [a,b] with n panels (n even).
template <class F>
auto simpson(F&& f, double a, double b, int n) -> decltype(f(a)) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    decltype(f(a)) acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * (h / 3.0);
}

// Gauss-Legendre nodes/weights on [-1,1].
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_legendre(int n);

// Gauss-Legendre quadrature of f over [a,b] with an n-point rule.
template <class F>
auto gauss(F&& f, double a, double b, int n) -> decltype(f(a)) {
    const GaussRule& r = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    decltype(f(a)) acc = f(c + h * r.x[0]) * r.w[0];
    for (int i = 1; i < n; ++i) acc += f(c + h * r.x[i]) * r.w[i];
    return acc * h;
}

// Adaptive Gauss-Kronrod 15(7) for complex-valued integrands on [a,b].
cplx adaptive_gk(const std::function<cplx(double)>& f, double a, double b,
                 double rel_tol = 1e-11, double abs_tol = 1e-14, int max_depth = 22);

// L2 inner product <f, g> = int f(x) conj(g(x)) dx on [0,L], composite Simpson.
cplx inner_product(const std::function<cplx(double)>& f,
                   const std::function<cplx(double)>& g, double L, int n = 4096);

}  // namespace kdv
