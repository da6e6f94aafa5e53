#include "kdv/critical_lengths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kdv {

namespace {

long long isqrt_ll(long long v) {
    if (v < 0) return -1;
    long long r = static_cast<long long>(std::sqrt(static_cast<double>(v)));
    while (r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
}

PairKind kind_of(long long k, long long l) {
    if (k == l) return PairKind::S1;
    return ((k - l) % 3 == 0) ? PairKind::S2 : PairKind::S3;
}

}  // namespace

std::vector<CriticalPair> solve_pairs(long long n) {
    std::vector<CriticalPair> out;
    if (n < 3) return out;
    // k^2 + k l + (l^2 - n) = 0 as a quadratic in k: the discriminant
    // 4n - 3 l^2 must be a perfect square and k = (-l + sqrt(disc)) / 2.
    for (long long l = 1; 3 * l * l <= n; ++l) {
        const long long disc = 4 * n - 3 * l * l;
        const long long s = isqrt_ll(disc);
        if (s * s != disc) continue;
        if ((s - l) % 2 != 0) continue;
        const long long k = (s - l) / 2;
        if (k < l) continue;
        if (k * k + k * l + l * l != n) continue;
        out.push_back({k, l, kind_of(k, l)});
    }
    std::sort(out.begin(), out.end(),
              [](const CriticalPair& a, const CriticalPair& b) { return a.k > b.k; });
    return out;
}

double critical_length_of(const CriticalPair& p) {
    const double n = static_cast<double>(p.k * p.k + p.k * p.l + p.l * p.l);
    return 2.0 * M_PI * std::sqrt(n / 3.0);
}

std::optional<CriticalLength> classify_length(double L0, double tol) {
    if (!(L0 > 0.0)) throw std::invalid_argument("classify_length: L0 must be positive");
    const double ic = 3.0 * (L0 / (2.0 * M_PI)) * (L0 / (2.0 * M_PI));
    const double icr = std::round(ic);
    if (std::abs(ic - icr) > tol * std::max(1.0, std::abs(ic))) return std::nullopt;
    const auto n = static_cast<long long>(icr);
    auto pairs = solve_pairs(n);
    if (pairs.empty()) return std::nullopt;

    CriticalLength cl;
    cl.L0 = L0;
    cl.index_IC = n;
    cl.pairs = pairs;
    int n_eq = 0, n_s2 = 0, n_s3 = 0;
    for (const auto& p : pairs) {
        if (p.kind == PairKind::S1) ++n_eq;
        if (p.kind == PairKind::S2) ++n_s2;
        if (p.kind == PairKind::S3) ++n_s3;
        cl.critical_eigenvalues.push_back(lambda_c(p));
    }
    cl.N0 = 2 * static_cast<int>(pairs.size() - n_eq) + (n_eq ? 1 : 0);
    if (n_s2 > 0 || (n_eq > 0 && pairs.size() > 1))
        cl.cls = LengthClass::N3;
    else if (n_eq > 0)
        cl.cls = LengthClass::N1;
    else
        cl.cls = LengthClass::N2;
    return cl;
}

double lambda_c(const CriticalPair& p) {
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    const double n = k * k + k * l + l * l;
    return (2 * k + l) * (k - l) * (2 * l + k) / (3.0 * std::sqrt(3.0) * n * std::sqrt(n));
}

namespace {

// Frequencies of the three exponentials of the Type 1 eigenfunction.
struct Freqs {
    double th1, th2, th3;  // G = c (-l e^{i th1 x} - k e^{i th2 x} + (k+l) e^{i th3 x})
};

Freqs type1_freqs(const CriticalPair& p) {
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    const double rn = std::sqrt(k * k + k * l + l * l);
    const double c = std::sqrt(3.0) / (3.0 * rn);
    return {c * (2 * k + l), -c * (k + 2 * l), c * (l - k)};
}

cplx expi_deriv(double theta, double x, int order) {
    cplx f = std::polar(1.0, theta * x);
    for (int i = 0; i < order; ++i) f *= cplx(0.0, theta);
    return f;
}

}  // namespace

cplx type1_eigenfunction(const CriticalPair& p, double L0, double x, int order) {
    if (x < -1e-12 || x > L0 + 1e-12)
        throw std::invalid_argument("type1_eigenfunction: x outside [0, L0]");
    const auto [th1, th2, th3] = type1_freqs(p);
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    const double amp = M_PI * std::sqrt(2.0 / (3.0 * L0 * L0 * L0));
    return amp * (-l * expi_deriv(th1, x, order) - k * expi_deriv(th2, x, order) +
                  (k + l) * expi_deriv(th3, x, order));
}

Type2Eval type2_eigenfunction(const CriticalPair& p, double L0, double x, int order) {
    if (p.kind == PairKind::S3)
        throw std::invalid_argument("type2_eigenfunction: no Type 2 eigenfunction for an S3 pair");
    if (x < -1e-12 || x > L0 + 1e-12)
        throw std::invalid_argument("type2_eigenfunction: x outside [0, L0]");
    const auto [th1, th2, th3] = type1_freqs(p);
    (void)th3;
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    Type2Eval ev;
    ev.g_tilde = (expi_deriv(th1, x, order) - expi_deriv(th2, x, order)) / std::sqrt(2.0 * L0);
    const cplx g1 = type1_eigenfunction(p, L0, x, order);
    ev.g_ortho = -(k - l) / (std::sqrt(3.0) * (k + l)) * g1 +
                 L0 / (M_PI * (k + l)) * ev.g_tilde;
    return ev;
}

cplx type2_boundary_derivative(const CriticalPair& p, double L0) {
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    return cplx(0.0, std::sqrt(2.0) * M_PI * (k + l) / std::pow(L0, 1.5));
}

std::string to_string(PairKind k) {
    switch (k) {
        case PairKind::S1: return "S1";
        case PairKind::S2: return "S2";
        default: return "S3";
    }
}

std::string to_string(LengthClass c) {
    switch (c) {
        case LengthClass::N1: return "N1";
        case LengthClass::N2: return "N2";
        default: return "N3";
    }
}

}  // namespace kdv
