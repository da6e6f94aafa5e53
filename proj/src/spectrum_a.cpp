#include "kdv/spectrum_a.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kdv/quadrature.hpp"
#include "kdv/rootfind.hpp"

namespace kdv {

namespace {

const cplx kI{0.0, 1.0};

cplx w_of(cplx tau) { return std::sqrt(cplx(1.0, 0.0) - 3.0 * tau * tau); }

cplx zeta_of(cplx tau) { return -kI * 2.0 * tau * (4.0 * tau * tau - 1.0); }

cplx G_of(cplx tau, double L) {
    const cplx w = w_of(tau);
    return -w * std::exp(3.0 * kI * L * tau) + w * std::cos(L * w) +
           3.0 * kI * tau * std::sin(L * w);
}

cplx dG_of(cplx tau, double L) {
    const cplx w = w_of(tau);
    const cplx wp = -3.0 * tau / w;
    const cplx e = std::exp(3.0 * kI * L * tau);
    return -wp * e - 3.0 * kI * L * w * e + wp * std::cos(L * w) - L * w * wp * std::sin(L * w) +
           3.0 * kI * std::sin(L * w) + 3.0 * kI * tau * L * wp * std::cos(L * w);
}

// Raw (unnormalized, overflow-scaled) eigenfunction evaluation. The common
// scale e^{-3 L max(Im tau, 0)} keeps the real-branch exponentials bounded.
cplx eval_raw_F(cplx tau, double L, double x, int order) {
    const cplx w = w_of(tau);
    const double shift = -3.0 * L * std::max(tau.imag(), 0.0);
    const cplx den = -std::exp(-3.0 * kI * L * tau + shift) + std::exp(-kI * L * w + shift);

    // term 1: sin(Lw) e^{-2 i tau x}, scaled
    cplx t1 = std::sin(L * w) * std::exp(-2.0 * kI * tau * x + shift);
    for (int i = 0; i < order; ++i) t1 *= -2.0 * kI * tau;

    // terms 2,3: e^{i tau x} g(x) with g'' = -w^2 g
    auto osc_term = [&](cplx amp_exp_extra, bool use_Lmx) {
        // g = sin(w (L-x)) or sin(w x)
        const cplx a = kI * tau;
        cplx p{1.0, 0.0}, q{0.0, 0.0};
        for (int i = 0; i < order; ++i) {
            const cplx pn = a * p - w * w * q;
            const cplx qn = p + a * q;
            p = pn;
            q = qn;
        }
        cplx g, gp;
        if (use_Lmx) {
            g = std::sin(w * (L - x));
            gp = -w * std::cos(w * (L - x));
        } else {
            g = std::sin(w * x);
            gp = w * std::cos(w * x);
        }
        return std::exp(a * x + amp_exp_extra) * (p * g + q * gp);
    };
    const cplx t2 = -osc_term(cplx(shift, 0.0), true);
    const cplx t3 = -osc_term(-3.0 * kI * L * tau + shift, false);
    return 2.0 * kI * (t1 + t2 + t3) / den;
}

double raw_norm_F(cplx tau, double L, int n = 2048) {
    auto f2 = [&](double x) { return std::norm(eval_raw_F(tau, L, x, 0)); };
    return std::sqrt(simpson(f2, 0.0, L, n));
}

EigenmodeA make_mode(cplx tau, double L) {
    EigenmodeA m;
    m.tau = tau;
    m.zeta = zeta_of(tau);
    m.L = L;
    const double nrm = raw_norm_F(tau, L);
    if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw std::runtime_error("spectrum_a: eigenfunction normalization failed");
    m.alpha = 1.0 / nrm;
    m.dF_at_0 = m.alpha * eval_raw_F(tau, L, 0.0, 1);
    return m;
}

}  // namespace

std::pair<double, double> char_A(double t_r, double t_i, double L) {
    const cplx g = G_of(cplx(t_r, t_i), L);
    return {g.real(), g.imag()};
}

cplx char_A_complex(cplx tau, double L) { return G_of(tau, L); }

EigenmodeA eigen_from_seed(cplx tau_seed, double L) {
    cplx tau = tau_seed;
    cplx g = G_of(tau, L);
    for (int it = 0; it < 50; ++it) {
        if (std::abs(g) < 1e-13) break;
        const cplx dg = dG_of(tau, L);
        if (dg == cplx{}) break;
        cplx step = g / dg;
        // halve the step until |G| decreases
        cplx tn = tau - step;
        cplx gn = G_of(tn, L);
        int halvings = 0;
        while (std::abs(gn) >= std::abs(g) && halvings < 25) {
            step *= 0.5;
            tn = tau - step;
            gn = G_of(tn, L);
            ++halvings;
        }
        if (std::abs(gn) >= std::abs(g)) break;
        tau = tn;
        g = gn;
    }
    if (std::abs(g) >= 1e-13) {
        std::ostringstream os;
        os << "eigen_from_seed: Newton did not converge; last residual |G| = " << std::abs(g);
        throw std::runtime_error(os.str());
    }
    return make_mode(tau, L);
}

EigenmodeA eigen_near(double lambda_target, double L) {
    auto cl = nearest_critical(L, 0.35);
    if (!cl) throw std::invalid_argument("eigen_near: L is not near a critical length");
    const CriticalPair* best = nullptr;
    double bestd = 1e300;
    for (const auto& p : cl->pairs) {
        const double d = std::abs(lambda_c(p) - std::abs(lambda_target));
        if (d < bestd) {
            bestd = d;
            best = &p;
        }
    }
    if (!best || bestd > 1e-6)
        throw std::invalid_argument("eigen_near: lambda_target is not a critical eigenvalue");
    const double tau_c =
        M_PI * static_cast<double>(2 * best->k + best->l) / (3.0 * cl->L0);
    const double seed = (lambda_target >= 0.0 && lambda_c(*best) > 0.0) ? -tau_c : tau_c;
    return eigen_from_seed(cplx(seed, 0.0), L);
}

std::vector<EigenmodeA> real_spectrum_A(double L, int count) {
    if (classify_length(L))
        throw std::invalid_argument("real_spectrum_A: length is critical");
    if (count < 1) throw std::invalid_argument("real_spectrum_A: count must be >= 1");

    // zeta = -2 t (4 t^2 + 1) with t > 0 solving
    // cos(L sqrt(1+3t^2) + theta(t)) = e^{-3 L t} sqrt(1+3t^2)/sqrt(1+12t^2).
    auto g = [&](double t) {
        const double r = std::sqrt(1.0 + 3.0 * t * t);
        const double theta = std::atan(3.0 * t / r);
        const double rhs = std::exp(-3.0 * L * t) * r / std::sqrt(1.0 + 12.0 * t * t);
        return std::cos(L * r + theta) - rhs;
    };

    std::vector<double> roots;
    auto harvest = [&](double a, double b, int cells) {
        for (auto [xl, xr] : scan_brackets(g, a, b, cells)) {
            const double t = (xl == xr) ? xl : bisect(g, xl, xr, 1e-14);
            roots.push_back(t);
        }
    };
    // geometric refinement near t = 0 (a root sits at t ~ (L-L0)^2 near a
    // critical length), then uniform cells an eighth of a phase window wide
    double lo = 1e-12;
    while (lo < 0.05 && static_cast<int>(roots.size()) < count + 4) {
        harvest(lo, lo * 4.0, 64);
        lo *= 4.0;
    }
    const double tmax = (count + 3) * 2.0 * M_PI / (std::sqrt(3.0) * L) + 1.0;
    const int cells = static_cast<int>(std::ceil((tmax - 0.05) /
                                                 (M_PI / (8.0 * std::sqrt(3.0) * L))));
    harvest(0.05, tmax, cells);

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                roots.end());
    if (static_cast<int>(roots.size()) < count) {
        std::ostringstream os;
        os << "real_spectrum_A: bracketing found " << roots.size() << " roots in (0, " << tmax
           << "], need " << count;
        throw std::runtime_error(os.str());
    }
    std::vector<EigenmodeA> out;
    for (int i = 0; i < count; ++i) {
        // polish via the complex Newton on G at tau = i t
        EigenmodeA m = eigen_from_seed(cplx(0.0, roots[i]), L);
        out.push_back(std::move(m));
    }
    return out;
}

cplx eval_F(const EigenmodeA& m, double x, int order) {
    if (x < -1e-12 || x > m.L + 1e-12) throw std::invalid_argument("eval_F: x outside [0, L]");
    return m.alpha * eval_raw_F(m.tau, m.L, x, order);
}

cplx duality_pairing_grid(const std::vector<cplx>& u, double L, const EigenmodeA& m) {
    const std::size_t n = u.size();
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("duality_pairing_grid: need odd sample count");
    const double dx = L / static_cast<double>(n - 1);
    std::vector<cplx> prod(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = dx * static_cast<double>(i);
        prod[i] = u[i] * eval_F(m, L - x, 0);
    }
    return simpson(std::span<const cplx>(prod), dx);
}

namespace {

// Least-squares atom coefficients: projection of the pair's Type 1
// eigenfunction onto the selected elliptic modes on [0, min(L, L0)].
ModeCombination project_direction(const CriticalPair& p, bool conj_pair, double L0,
                                  const SpectrumB& sp, const std::vector<int>& indices) {
    const double Lm = std::min(L0, sp.L);
    ModeCombination out;
    double nrm2 = 0.0;
    for (int j : indices) {
        const EigenmodeB& m = sp.mode(j);
        auto g = [&](double x) {
            const cplx v = type1_eigenfunction(p, L0, x, 0);
            return conj_pair ? std::conj(v) : v;
        };
        auto e = [&](double x) { return eval_eigenfunction(m, x, 0); };
        const cplx c = inner_product(g, e, Lm, 4096);
        out.coeff[j] = c;
        nrm2 += std::norm(c);
    }
    const double nrm = std::sqrt(nrm2);
    for (auto& [j, c] : out.coeff) c /= nrm;
    return out;
}

}  // namespace

QuasiInvariantBasis quasi_invariant_basis(double L, const CriticalLength& cl,
                                          const SpectrumB& sp) {
    QuasiInvariantBasis qb;
    qb.L = L;
    qb.L0 = cl.L0;
    qb.critical = cl;

    // ---- A side: one Newton run per signed critical eigenvalue -------------
    for (const auto& p : cl.pairs) {
        const double lc = lambda_c(p);
        if (p.kind == PairKind::S1) {
            qb.basis_A.push_back(eigen_near(0.0, L));
        } else {
            qb.basis_A.push_back(eigen_near(lc, L));
            qb.basis_A.push_back(eigen_near(-lc, L));
        }
    }

    // ---- B side: group the positive elliptic indices by pair ---------------
    const auto groups = group_elliptic_by_pair(sp, cl);
    for (std::size_t ip = 0; ip < cl.pairs.size(); ++ip) {
        const auto& p = cl.pairs[ip];
        if (p.kind == PairKind::S1) {
            const int j = groups[ip][0];
            // atom = projection of G over modes {j, -j}; good dir = complement
            auto atom = project_direction(p, false, cl.L0, sp, {j, -j});
            qb.basis_B.push_back(atom);
            ModeCombination good;
            good.coeff[j] = -std::conj(atom.coeff.at(-j));
            good.coeff[-j] = std::conj(atom.coeff.at(j));
            qb.good_dirs.push_back(good);
        } else if (p.kind == PairKind::S2) {
            const int j1 = groups[ip][0];
            const int j2 = groups[ip][1];
            auto atom = project_direction(p, false, cl.L0, sp, {j1, j2});
            qb.basis_B.push_back(atom);
            ModeCombination atom_m;
            for (const auto& [j, c] : atom.coeff) atom_m.coeff[-j] = std::conj(c);
            qb.basis_B.push_back(atom_m);
            ModeCombination good;
            good.coeff[j1] = -std::conj(atom.coeff.at(j2));
            good.coeff[j2] = std::conj(atom.coeff.at(j1));
            qb.good_dirs.push_back(good);
            ModeCombination good_m;
            for (const auto& [j, c] : good.coeff) good_m.coeff[-j] = std::conj(c);
            qb.good_dirs.push_back(good_m);
        } else {
            const int j = groups[ip][0];
            ModeCombination atom, atom_m;
            atom.coeff[j] = cplx(1.0, 0.0);
            atom_m.coeff[-j] = cplx(1.0, 0.0);
            qb.basis_B.push_back(atom);
            qb.basis_B.push_back(atom_m);
            // good directions move to the first hyperbolic pair
            ModeCombination good, good_m;
            good.coeff[sp.N_L + 1] = cplx(1.0, 0.0);
            good_m.coeff[-(sp.N_L + 1)] = cplx(1.0, 0.0);
            qb.good_dirs.push_back(good);
            qb.good_dirs.push_back(good_m);
        }
    }
    return qb;
}

}  // namespace kdv
