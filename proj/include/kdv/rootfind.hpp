#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace kdv {

// Bisection on a bracketing interval; f(a) and f(b) must have opposite signs.
template <class F>
double bisect(F&& f, double a, double b, double xtol = 1e-13, int maxit = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw std::runtime_error("bisect: endpoints do not bracket a root");
    for (int it = 0; it < maxit && (b - a) > xtol; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// A few Newton steps to polish a root; falls back to the input on failure.
template <class F, class DF>
double newton_polish(F&& f, DF&& df, double x0, int steps = 3) {
    double x = x0;
    for (int i = 0; i < steps; ++i) {
        const double d = df(x);
        if (d == 0.0 || !std::isfinite(d)) return x;
        const double xn = x - f(x) / d;
        if (!std::isfinite(xn)) return x;
        x = xn;
    }
    return std::isfinite(f(x)) && std::abs(f(x)) <= std::abs(f(x0)) ? x : x0;
}

// Scan [a,b] with n cells and return all sign-change brackets.
template <class F>
std::vector<std::pair<double, double>> scan_brackets(F&& f, double a, double b, int n) {
    std::vector<std::pair<double, double>> out;
    double xl = a, fl = f(a);
    for (int i = 1; i <= n; ++i) {
        const double xr = a + (b - a) * i / n;
        const double fr = f(xr);
        if (fl == 0.0) out.emplace_back(xl, xl);
        if ((fl > 0) != (fr > 0) && fl != 0.0 && fr != 0.0) out.emplace_back(xl, xr);
        xl = xr;
        fl = fr;
    }
    return out;
}

// Expand a bracket around a predicted root until a sign change is found.
template <class F>
std::optional<std::pair<double, double>> expand_bracket(F&& f, double x0, double w0, double wmax) {
    for (double w = w0; w <= wmax; w *= 2.0) {
        const double a = x0 - w, b = x0 + w;
        if ((f(a) > 0) != (f(b) > 0)) return std::make_pair(a, b);
        // also try the half-brackets in case the root pair straddles x0
        if ((f(a) > 0) != (f(x0) > 0)) return std::make_pair(a, x0);
        if ((f(x0) > 0) != (f(b) > 0)) return std::make_pair(x0, b);
    }
    return std::nullopt;
}

}  // namespace kdv
