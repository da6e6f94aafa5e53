#include "doctest.h"

#include <cmath>
#include <random>

#include "kdv/biortho.hpp"
#include "kdv/fit.hpp"
#include "kdv/quadrature.hpp"
#include "kdv/spectrum_b.hpp"

using namespace kdv;

TEST_CASE("Sigma_beta: normalization, symmetry, bounds") {
    const double beta = 40.0, nu = 0.9;
    CHECK(std::abs(Sigma_beta(cplx(0.0, 0.0), beta, nu) - 1.0) < 1e-10);
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> ux(-30.0, 30.0);
    for (int i = 0; i < 30; ++i) {
        const double x = ux(rng);
        const cplx s = Sigma_beta(cplx(x, 0.0), beta, nu);
        CHECK(std::abs(s.imag()) < 1e-10);        // real on the real axis
        CHECK(std::abs(s) <= 1.0 + 1e-12);        // |Sigma| <= 1
        const cplx sm = Sigma_beta(cplx(-x, 0.0), beta, nu);
        CHECK(std::abs(s - sm) < 1e-10);          // even
    }
    // 1/2 <= Sigma(s0) <= 1 for |nu s0| < 1
    for (double s0 : {0.1, 0.5, 1.0}) {
        const double v = Sigma_beta(cplx(s0, 0.0), beta, nu).real();
        CHECK(v >= 0.5);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("Psi_trunc: unit at zero, exact zeros, cube-root growth") {
    const SpectrumB sp = full_spectrum(2.0 * M_PI + 0.3, 16);
    std::map<int, double> lam;
    for (int j = 1; j <= 16; ++j) {
        lam[j] = sp.mode(j).lambda;
        lam[-j] = sp.mode(-j).lambda;
    }
    CHECK(std::abs(Psi_trunc(2, cplx(0.0, 0.0), lam, 12) - 1.0) < 1e-14);
    for (int k : {-3, 1, 5}) {
        if (k == 2) continue;
        const cplx z(lam[k] - lam[2], 0.0);
        CHECK(std::abs(Psi_trunc(2, z, lam, 12)) < 1e-12);
    }
    // growth along the real axis: log|Psi| fitted against |x|^{1/3} between
    // x = 10 and 10^3 stays sublinear in x (entire of order 1/3 profile)
    std::vector<double> xs, ys;
    for (double x = 10.0; x <= 1000.0; x *= 1.6) {
        xs.push_back(std::cbrt(x));
        ys.push_back(std::log(std::abs(Psi_trunc(2, cplx(x, 0.0), lam, 12))));
    }
    // linear fit in |x|^{1/3}: positive slope, decent correlation
    const LineFit f = fit_line(xs, ys);
    CHECK(f.slope > 0.0);
    double resid = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        resid = std::max(resid, std::abs(f.intercept + f.slope * xs[i] - ys[i]));
    CHECK(resid < 0.35 * (std::abs(ys.back()) + 1.0));
    // degenerate spectrum rejected
    std::map<int, double> bad = lam;
    bad[5] = bad[4];
    CHECK_THROWS(Psi_trunc(4, cplx(1.0, 0.0), bad, 12));
}

TEST_CASE("plain family at L = 2 pi + 0.3: bi-orthogonality") {
    const SpectrumB sp = full_spectrum(2.0 * M_PI + 0.3, 10);
    const auto fam = build_family(sp, 2.0, 8);
    CHECK(fam.reported_tol < 1e-3);

    // max_{|j|,|k| <= 4} |pairing - delta| < 1e-3 via independent Simpson
    double worst = 0.0;
    for (int j = -4; j <= 4; ++j) {
        if (j == 0) continue;
        const auto& fn = fam.plain(j);
        for (int k = -4; k <= 4; ++k) {
            if (k == 0) continue;
            const cplx pv = pairing(fn.samples, fam.T, sp.mode(k).lambda);
            worst = std::max(worst, std::abs(pv - (j == k ? 1.0 : 0.0)));
        }
    }
    CHECK(worst < 1e-3);

    // pairing linearity
    auto phi = fam.plain(2).samples;
    std::vector<cplx> scaled(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) scaled[i] = 2.5 * phi[i];
    CHECK(std::abs(pairing(scaled, fam.T, sp.mode(2).lambda) -
                   2.5 * pairing(phi, fam.T, sp.mode(2).lambda)) < 1e-12);

    // approximate Paley-Wiener support: the L2 mass of phi_j comes from
    // [-T/2, T/2]; the sampled tails at the window edges are small
    for (int j : {1, 3}) {
        const auto& s = fam.plain(j).samples;
        double interior = 0.0, edge = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double a = std::norm(s[i]);
            interior += a;
            if (i < s.size() / 50 || i + s.size() / 50 >= s.size()) edge += a;
        }
        CHECK(edge < 1e-2 * interior);
    }

    // L-infinity growth of phi_j stays bounded relative to phi_1
    double ref = 0.0;
    for (const auto& v : fam.plain(1).samples) ref = std::max(ref, std::abs(v));
    for (int j = 2; j <= 6; ++j) {
        double mx = 0.0;
        for (const auto& v : fam.plain(j).samples) mx = std::max(mx, std::abs(v));
        CHECK(mx / ref < 50.0);
    }
}

TEST_CASE("psi decay bound: fitted inverse-power envelope") {
    const SpectrumB sp = full_spectrum(2.0 * M_PI + 0.3, 10);
    const auto fam = build_family(sp, 2.0, 8);
    // reconstruct psi_1 on the real axis from its definition and check an
    // envelope K / (1 + |x - la_1|^{2N}) with N >= 2 fits the far field
    std::map<int, double> lam = fam.lambda;
    const double l1 = lam[1];
    double K_fit = 0.0;
    const int N = 2;
    auto psi_at = [&](double x) {
        return std::abs(Psi_trunc(1, cplx(x - l1, 0.0), lam, fam.K_trunc) *
                        Sigma_beta(cplx(l1 - x, 0.0), fam.beta, fam.nu));
    };
    // fit the envelope constant on a coarse grid, then verify the fitted
    // inverse-power bound between the fitting nodes
    for (double x = l1 + 12.0; x <= l1 + 150.0; x += 6.0)
        K_fit = std::max(K_fit, psi_at(x) * (1.0 + std::pow(std::abs(x - l1), 2 * N)));
    CHECK(K_fit > 0.0);
    for (double x = l1 + 12.5; x <= l1 + 150.0; x += 1.7)
        CHECK(psi_at(x) <= 2.0 * K_fit / (1.0 + std::pow(std::abs(x - l1), 2 * N)));
}

TEST_CASE("S1 compensated family at L = 2 pi + 0.02") {
    const double L = 2.0 * M_PI + 0.02;
    const SpectrumB sp = full_spectrum(L, 10);
    const auto cl = classify_length(2.0 * M_PI);
    REQUIRE(cl.has_value());
    const auto fam = build_family(sp, 2.0, 8, cl);
    REQUIRE(fam.comps.size() == 1);
    const auto& ci = fam.comps[0];
    CHECK(ci.kind == PairKind::S1);
    CHECK(ci.C1 == ci.C2);
    CHECK(std::abs(ci.C1) >= 0.5);
    CHECK(std::abs(ci.C1) <= 2.0 / 3.0 + 1e-12);

    const FamilyFn* th = fam.theta_for(1);
    REQUIRE(th != nullptr);
    CHECK(std::abs(pairing(th->samples, fam.T, sp.mode(1).lambda) - 1.0) < 1e-3);
    CHECK(std::abs(pairing(th->samples, fam.T, sp.mode(-1).lambda) - 1.0) < 1e-3);
    for (int k : {2, -2, 3, -3, 4}) {
        CHECK(std::abs(pairing(th->samples, fam.T, sp.mode(k).lambda)) < 1e-3);
    }
    // the plain functions vanish against the compensated eigenvalues
    CHECK(std::abs(pairing(fam.plain(2).samples, fam.T, sp.mode(1).lambda)) < 1e-3);
}

TEST_CASE("S2 compensated family near 2 pi sqrt(7): a(L) -> 1") {
    // the long-L spectrum mixes a tight near-critical cluster with fast
    // cubic growth; the family is kept at the cluster scale (K_trunc = 4)
    const double L0 = 2.0 * M_PI * std::sqrt(7.0);
    const auto cl = classify_length(L0);
    REQUIRE(cl.has_value());
    double prev = -1.0;
    for (double d : {1e-1, 1e-2, 1e-3}) {
        const SpectrumB sp = full_spectrum(L0 + d, 10);
        const auto fam = build_family(sp, 2.0, 4, cl);
        REQUIRE(fam.comps.size() == 1);
        const double gap = std::abs(fam.comps[0].aL - 1.0);
        CHECK(fam.comps[0].aL > 0.25);
        CHECK(fam.comps[0].aL < 4.0);
        if (prev >= 0.0) CHECK(gap < prev);
        prev = gap;
    }
    // pairing structure of theta+: 1 at lambda_1, a(L) at lambda_2, 0 elsewhere
    const double d = 1e-2;
    const SpectrumB sp = full_spectrum(L0 + d, 10);
    const auto fam = build_family(sp, 2.0, 4, cl);
    const auto groups = group_elliptic_by_pair(sp, *cl);
    const int j1 = fam.comps[0].indices[0], j2 = fam.comps[0].indices[1];
    CHECK(j1 == groups[0][0]);
    CHECK(j2 == groups[0][1]);
    const FamilyFn* th = fam.theta_for(j1);
    REQUIRE(th != nullptr);
    CHECK(std::abs(pairing(th->samples, fam.T, sp.mode(j1).lambda) - 1.0) < 2e-3);
    CHECK(std::abs(pairing(th->samples, fam.T, sp.mode(j2).lambda) - fam.comps[0].aL) < 2e-3);
    for (int k : {1, -1, 4, -4}) {
        CHECK(std::abs(pairing(th->samples, fam.T, sp.mode(k).lambda)) < 2e-3);
    }
}
