#include "kdv/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace kdv {

namespace {

template <class T>
T simpson_impl(std::span<const T> f, double dx) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson: need odd sample count >= 3");
    T acc = f[0] + f[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i) acc += f[i] * (i % 2 ? 4.0 : 2.0);
    return acc * (dx / 3.0);
}

}  // namespace

double simpson(std::span<const double> f, double dx) { return simpson_impl(f, dx); }
cplx simpson(std::span<const cplx> f, double dx) { return simpson_impl(f, dx); }

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    // Newton iteration on Legendre polynomials, symmetric nodes.
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p1 = 0, dp = 0;
        for (int it2 = 0; it2 < 100; ++it2) {
            p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * x * p2 - j * p3) / (j + 1.0);
            }
            dp = n * (x * p1 - p2) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

namespace {

// Kronrod 15 / Gauss 7 node pairs on [-1,1].
constexpr double kGK15x[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kGK15w[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kG7w[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

struct GKResult {
    cplx value;
    double err;
};

GKResult gk15(const std::function<cplx(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    cplx k{0, 0}, g{0, 0};
    for (int i = 0; i < 15; ++i) {
        const cplx fv = f(c + h * kGK15x[i]);
        k += fv * kGK15w[i];
        if (i % 2 == 1) g += fv * kG7w[i / 2];
    }
    k *= h;
    g *= h;
    return {k, std::abs(k - g)};
}

cplx adaptive_gk_rec(const std::function<cplx(double)>& f, double a, double b, double tol,
                     int depth, int max_depth) {
    const GKResult r = gk15(f, a, b);
    if (r.err <= tol || depth >= max_depth) return r.value;
    const double m = 0.5 * (a + b);
    return adaptive_gk_rec(f, a, m, 0.5 * tol, depth + 1, max_depth) +
           adaptive_gk_rec(f, m, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

cplx adaptive_gk(const std::function<cplx(double)>& f, double a, double b, double rel_tol,
                 double abs_tol, int max_depth) {
    const GKResult whole = gk15(f, a, b);
    const double tol = std::max(abs_tol, rel_tol * std::abs(whole.value));
    if (whole.err <= tol) return whole.value;
    const double m = 0.5 * (a + b);
    return adaptive_gk_rec(f, a, m, 0.5 * tol, 1, max_depth) +
           adaptive_gk_rec(f, m, b, 0.5 * tol, 1, max_depth);
}

cplx inner_product(const std::function<cplx(double)>& f, const std::function<cplx(double)>& g,
                   double L, int n) {
    if (n % 2) ++n;
    const double h = L / n;
    auto term = [&](double x) { return f(x) * std::conj(g(x)); };
    cplx acc = term(0.0) + term(L);
    for (int i = 1; i < n; ++i) acc += term(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * (h / 3.0);
}

}  // namespace kdv
