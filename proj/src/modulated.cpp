#include "kdv/modulated.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace kdv {

namespace {

using cplx = std::complex<double>;

// Terms of the scaled closed form; everything is divided by e^{omega L} so
// no exponential exceeds O(1) for any mu.
struct HmuForm {
    cplx a[3];
    cplx z[3];
    double shift[3];
    double den;
};

HmuForm hmu_form(double omega, double L) {
    const double b = 0.5 * std::sqrt(4.0 + 3.0 * omega * omega);
    HmuForm f;
    f.a[0] = cplx(std::sin(b * L), 0.0);
    f.z[0] = cplx(omega, 0.0);
    f.shift[0] = -1.5 * omega * L;
    f.a[1] = cplx(0.0, 1.0) * std::exp(cplx(0.0, b * L));
    f.z[1] = cplx(-0.5 * omega, -b);
    f.shift[1] = -1.5 * omega * L;
    f.a[2] = cplx(0.0, 1.0);
    f.z[2] = cplx(-0.5 * omega, b);
    f.shift[2] = 0.0;

    const double e1 = std::exp(-0.5 * omega * L);
    const double e2 = std::exp(-1.5 * omega * L);
    const double e3 = std::exp(-2.0 * omega * L);
    const double r = 2.0 * b;  // sqrt(4 + 3 omega^2)
    f.den = r * 0.5 * (1.0 + e3) + 3.0 * omega * 0.5 * (e1 - e2) * std::sin(b * L) -
            r * 0.5 * (e1 + e2) * std::cos(b * L);
    return f;
}

}  // namespace

ModulatedFunction solve_h(double L) {
    if (!(L > 0.0)) throw std::invalid_argument("solve_h: L must be positive");
    const double s = std::sin(0.5 * L);
    if (std::abs(s) < 1e-6) {
        std::ostringstream os;
        os << "solve_h: L within " << 1e-6 << " of 2*pi*k in sin(L/2); conditioning ~ "
           << 1.0 / std::abs(s);
        throw std::invalid_argument(os.str());
    }
    ModulatedFunction h;
    h.mu = 0.0;
    h.L = L;
    return h;
}

ModulatedFunction solve_h_mu(double mu, double L) {
    if (!(mu > 0.0)) throw std::invalid_argument("solve_h_mu: mu must be positive");
    if (!(L > 0.0)) throw std::invalid_argument("solve_h_mu: L must be positive");
    // unique real root of w^3 + w = mu (Cardano, then Newton polish)
    const double disc = std::sqrt(0.25 * mu * mu + 1.0 / 27.0);
    double w = std::cbrt(0.5 * mu + disc) + std::cbrt(0.5 * mu - disc);
    for (int i = 0; i < 3; ++i) w -= (w * w * w + w - mu) / (3.0 * w * w + 1.0);

    const HmuForm f = hmu_form(w, L);
    const double scale = std::sqrt(4.0 + 3.0 * w * w);
    if (std::abs(f.den) < 1e-12 * scale) {
        std::ostringstream os;
        os << "solve_h_mu: closed-form denominator " << f.den << " below 1e-12 * " << scale
           << " (non-generic mu)";
        throw std::runtime_error(os.str());
    }
    ModulatedFunction h;
    h.mu = mu;
    h.L = L;
    h.omega = w;
    return h;
}

double eval_h(const ModulatedFunction& h, double x, int order) {
    if (order < 0 || order > 3) throw std::invalid_argument("eval_h: order out of range");
    if (h.mu == 0.0) {
        const double den = 2.0 * std::sin(0.5 * h.L);
        const double u = x - 0.5 * h.L;
        switch (order) {
            case 0: return (std::cos(0.5 * h.L) - std::cos(u)) / den;
            case 1: return std::sin(u) / den;
            case 2: return std::cos(u) / den;
            default: return -std::sin(u) / den;
        }
    }
    const HmuForm f = hmu_form(h.omega, h.L);
    cplx acc{0.0, 0.0};
    for (int m = 0; m < 3; ++m) {
        cplx zn{1.0, 0.0};
        for (int i = 0; i < order; ++i) zn *= f.z[m];
        acc += f.a[m] * zn * std::exp(f.z[m] * x + f.shift[m]);
    }
    return acc.real() / f.den;
}

BoundaryDerivs h_mu_boundary(const ModulatedFunction& h) {
    return {eval_h(h, 0.0, 1), eval_h(h, h.L, 1)};
}

}  // namespace kdv
