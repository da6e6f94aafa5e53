#include "kdv/spectrum_b.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kdv/quadrature.hpp"
#include "kdv/rootfind.hpp"

namespace kdv {

namespace {

constexpr double kEllThreshold = 0.57735026918962576451;  // 1/sqrt(3)
constexpr double kTrivialTau = 0.28867513459481288225;    // sqrt(3)/6

double lambda_of_tau(double t) { return 2.0 * t * (4.0 * t * t - 1.0); }

// The three real roots of 2 tau (4 tau^2 - 1) = lambda for |lambda| < 2 sqrt(3)/9.
std::array<double, 3> tau_siblings(double lambda) {
    // depressed cubic t^3 - t/4 - lambda/8 = 0, trig solution
    double arg = 1.5 * std::sqrt(3.0) * lambda;
    arg = std::clamp(arg, -1.0, 1.0);
    const double phi = std::acos(arg);
    std::array<double, 3> out{};
    for (int m = 0; m < 3; ++m)
        out[m] = (1.0 / std::sqrt(3.0)) * std::cos((phi - 2.0 * M_PI * m) / 3.0);
    return out;
}

}  // namespace

double char_elliptic(double t, double L) {
    const double d = 1.0 - 3.0 * t * t;
    if (!(d > 0.0)) throw std::invalid_argument("char_elliptic: |t| >= 1/sqrt(3)");
    const double s = std::sqrt(d);
    return 2.0 * s * std::cos(2.0 * t * L) - (s + 3.0 * t) * std::cos((s - t) * L) +
           (3.0 * t - s) * std::cos((s + t) * L);
}

double char_elliptic_dt(double t, double L) {
    const double d = 1.0 - 3.0 * t * t;
    if (!(d > 0.0)) throw std::invalid_argument("char_elliptic_dt: |t| >= 1/sqrt(3)");
    const double s = std::sqrt(d);
    const double sp = -3.0 * t / s;
    return 2.0 * sp * std::cos(2.0 * t * L) - 4.0 * L * s * std::sin(2.0 * t * L) -
           (sp + 3.0) * std::cos((s - t) * L) +
           (s + 3.0 * t) * L * (sp - 1.0) * std::sin((s - t) * L) +
           (3.0 - sp) * std::cos((s + t) * L) -
           (3.0 * t - s) * L * (sp + 1.0) * std::sin((s + t) * L);
}

double char_hyperbolic(double t, double L) {
    const double d = 3.0 * t * t - 1.0;
    if (!(d > 0.0)) throw std::invalid_argument("char_hyperbolic: 3 t^2 - 1 <= 0");
    const double a = std::sqrt(d);
    const double q = std::exp(-a * L);          // < 1
    const double q2 = q * q;
    const double sech = 2.0 * q / (1.0 + q2);   // 1 / cosh(aL)
    const double tanh = (1.0 - q2) / (1.0 + q2);
    return a * std::cos(2.0 * t * L) * sech - 3.0 * t * std::sin(t * L) * tanh -
           a * std::cos(t * L);
}

std::optional<CriticalLength> nearest_critical(double L, double max_offset) {
    const auto lo = static_cast<long long>(
        std::floor(3.0 * std::pow((L - max_offset) / (2.0 * M_PI), 2)));
    const auto hi = static_cast<long long>(
        std::ceil(3.0 * std::pow((L + max_offset) / (2.0 * M_PI), 2)));
    std::optional<CriticalLength> best;
    double best_d = max_offset;
    for (long long n = std::max<long long>(3, lo - 1); n <= hi + 1; ++n) {
        auto pairs = solve_pairs(n);
        if (pairs.empty()) continue;
        const double L0 = 2.0 * M_PI * std::sqrt(static_cast<double>(n) / 3.0);
        if (std::abs(L - L0) <= best_d) {
            best_d = std::abs(L - L0);
            best = classify_length(L0);
        }
    }
    return best;
}

std::array<double, 2> perturbation_prediction_split(const CriticalPair& p, double L0, double L) {
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    const double n = k * k + k * l + l * l;
    const double lc = lambda_c(p);
    const double drift = (k - l) * (k + 2 * l) * (2 * k + l) / (2.0 * M_PI * n * n);
    const double split = 1.0 / (M_PI * std::sqrt(n));
    const double d = L - L0;
    return {lc - drift * d - split * std::abs(d), lc - drift * d + split * std::abs(d)};
}

double perturbation_prediction_quadratic(const CriticalPair& p, double L0, double L) {
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    const double n = k * k + k * l + l * l;
    const double d = L - L0;
    // Derived via the implicit function theorem on F at the critical point:
    // tau'' = -d2F/dL2 / dF/dt and lambda'(tau) = 6 k (k+l) / n.
    const double coeff =
        -(k + l) * l * (2 * k + l) * (2 * k + l) * M_PI * M_PI /
        (3.0 * std::sqrt(3.0) * n * L0 * L0 * L0);
    return lambda_c(p) + coeff * d * d;
}

RotationData rotation_matrix(const CriticalPair& p) {
    if (p.kind == PairKind::S3)
        throw std::invalid_argument("rotation_matrix: defined only for S1/S2 pairs");
    const double k = static_cast<double>(p.k), l = static_cast<double>(p.l);
    const double L0 = critical_length_of(p);
    RotationData rd;
    const double c = M_PI * (k - l) / (std::sqrt(3.0) * L0);
    rd.theta = std::acos(c);
    const double c32 = std::cos(1.5 * rd.theta), s32 = std::sin(1.5 * rd.theta);
    rd.C_rot = {{{-c32, -s32}, {s32, -c32}}};
    for (int row = 0; row < 2; ++row) {
        const double sgn = row == 0 ? 1.0 : -1.0;
        const double rad = std::sqrt(6.0 * L0 * L0 + sgn * 2.0 * std::sqrt(3.0) * M_PI * L0 * (k - l));
        rd.C_explicit[row][0] =
            -(-2.0 * M_PI * M_PI * (k * k + 4.0 * k * l + l * l) +
              sgn * std::sqrt(3.0) * M_PI * L0 * (k - l)) /
            (std::sqrt(3.0) * L0 * rad);
        rd.C_explicit[row][1] =
            -M_PI * (k + l) * (2.0 * M_PI * (k - l) + sgn * std::sqrt(3.0) * L0) / (L0 * rad);
    }
    return rd;
}

namespace {

// ---- eigenfunction evaluation ------------------------------------------

struct EllipticParts {
    cplx xi1, xi2, xi3;
};

EllipticParts elliptic_exponents(double tau) {
    const double s = std::sqrt(1.0 - 3.0 * tau * tau);
    return {cplx(-(tau + s), 0.0), cplx(s - tau, 0.0), cplx(2.0 * tau, 0.0)};
}

cplx eval_elliptic_raw(const EigenmodeB& m, double x, int order) {
    const auto [xi1, xi2, xi3] = elliptic_exponents(m.tau_eval);
    auto term = [&](cplx r, cplx xi) {
        cplx f = r * std::exp(cplx(0.0, 1.0) * xi * x);
        for (int i = 0; i < order; ++i) f *= cplx(0.0, 1.0) * xi;
        return f;
    };
    return term(m.r1, xi1) + term(m.r2, xi2) + term(m.r3, xi3);
}

// Hyperbolic modes are evaluated through the sinh/cosh-ratio rearrangement;
// the raw exponentials overflow for large tau.
struct HypState {
    double a, L;
    cplx e3;  // exp(3 i tau L)
    double q2L;
    cplx A(double x) const {
        const double s1 = std::exp(-a * x) * (1.0 - std::exp(-2.0 * a * (L - x))) / (1.0 - q2L);
        const double s2 = std::exp(-a * (L - x)) * (1.0 - std::exp(-2.0 * a * x)) / (1.0 - q2L);
        return s1 + e3 * s2;
    }
    cplx B(double x) const {
        const double c1 = std::exp(-a * x) * (1.0 + std::exp(-2.0 * a * (L - x))) / (1.0 - q2L);
        const double c2 = std::exp(-a * (L - x)) * (1.0 + std::exp(-2.0 * a * x)) / (1.0 - q2L);
        return a * (-c1 + e3 * c2);
    }
};

cplx eval_hyperbolic_raw(const EigenmodeB& m, double x, int order) {
    const double a = std::sqrt(3.0 * m.tau_eval * m.tau_eval - 1.0);
    HypState st{a, m.L, std::exp(cplx(0.0, 3.0 * m.tau_eval * m.L)), std::exp(-2.0 * a * m.L)};
    // f^(n) = e^{-i tau x} (p A + q B) + r e^{2 i tau x}
    cplx p{1.0, 0.0}, q{0.0, 0.0}, r{-1.0, 0.0};
    const cplx itau(0.0, m.tau_eval);
    for (int i = 0; i < order; ++i) {
        const cplx pn = -itau * p + (a * a) * q;
        const cplx qn = p - itau * q;
        const cplx rn = 2.0 * itau * r;
        p = pn;
        q = qn;
        r = rn;
    }
    return std::exp(-itau * x) * (p * st.A(x) + q * st.B(x)) + r * std::exp(2.0 * itau * x);
}

cplx eval_raw(const EigenmodeB& m, double x, int order) {
    return m.elliptic ? eval_elliptic_raw(m, x, order) : eval_hyperbolic_raw(m, x, order);
}

double raw_norm(const EigenmodeB& m, int panels) {
    auto f2 = [&](double x) {
        const cplx v = eval_raw(m, x, 0);
        return std::norm(v);
    };
    return std::sqrt(simpson(f2, 0.0, m.L, panels));
}

// Unit-modulus factor rotating the reference value onto the positive real
// axis. Reference: E'(L) when it is not degenerate, otherwise the first
// nonzero Taylor coefficient at 0.
cplx phase_factor(const EigenmodeB& m, double norm) {
    const double tol = 1e-8 * norm * (1.0 + std::abs(m.tau_eval));
    cplx ref = eval_raw(m, m.L, 1);
    if (std::abs(ref) <= tol) {
        for (int ord = 2; ord <= 3 && std::abs(ref) <= tol; ++ord) ref = eval_raw(m, 0.0, ord);
    }
    if (std::abs(ref) == 0.0) return cplx(1.0, 0.0);
    return std::conj(ref) / std::abs(ref);
}

EigenmodeB build_elliptic_mode(double tau, double lambda, double L, const SpectrumOptions& opt) {
    // pick the best-conditioned sibling parameterization of the same eigenvalue
    auto sib = tau_siblings(lambda);
    EigenmodeB best;
    double best_den = -1.0;
    for (double tc : sib) {
        if (3.0 * tc * tc >= 1.0) continue;
        double t = tc;
        // polish on the characteristic function (siblings from the cubic
        // carry the root-finder error of lambda)
        for (int i = 0; i < 3; ++i) {
            const double d = char_elliptic_dt(t, L);
            if (d == 0.0) break;
            t -= char_elliptic(t, L) / d;
        }
        if (!(3.0 * t * t < 1.0)) continue;
        const auto [xi1, xi2, xi3] = elliptic_exponents(t);
        const cplx i1(0.0, 1.0);
        const cplx E1 = std::exp(i1 * xi1 * L), E2 = std::exp(i1 * xi2 * L),
                   E3 = std::exp(i1 * xi3 * L);
        const cplx den = E2 - E3;
        if (std::abs(den) > best_den) {
            EigenmodeB m;
            m.tau = t;
            m.tau_eval = t;
            m.lambda = lambda;
            m.elliptic = true;
            m.L = L;
            m.r1 = cplx(1.0, 0.0);
            m.r2 = -(E1 - E3) / den;
            m.r3 = -m.r1 - m.r2;
            best = m;
            best_den = std::abs(den);
        }
    }
    if (best_den < 1e-13)
        throw std::runtime_error("full_spectrum: elliptic eigenfunction degenerate; length is effectively critical");
    const double nrm = raw_norm(best, opt.norm_panels);
    best.alpha = phase_factor(best, nrm) / nrm;
    best.dE_at_L = best.alpha * eval_raw(best, L, 1);
    return best;
}

EigenmodeB build_hyperbolic_mode(double tau, double L, const SpectrumOptions& opt) {
    EigenmodeB m;
    m.tau = tau;
    m.tau_eval = tau;
    m.lambda = lambda_of_tau(tau);
    m.elliptic = false;
    m.L = L;
    const double nrm = raw_norm(m, opt.norm_panels);
    m.alpha = phase_factor(m, nrm) / nrm;
    m.dE_at_L = m.alpha * eval_raw(m, L, 1);
    return m;
}

}  // namespace

cplx eval_eigenfunction(const EigenmodeB& mode, double x, int order) {
    if (x < -1e-12 || x > mode.L + 1e-12)
        throw std::invalid_argument("eval_eigenfunction: x outside [0, L]");
    if (mode.conjugated) return std::conj(mode.alpha * eval_raw(mode, x, order));
    return mode.alpha * eval_raw(mode, x, order);
}

cplx boundary_derivative(const EigenmodeB& mode) { return mode.dE_at_L; }

const EigenmodeB& SpectrumB::mode(int j) const {
    if (j == 0 || std::abs(j) > jmax) throw std::out_of_range("SpectrumB::mode: bad index");
    return j > 0 ? modes[j - 1] : modes[jmax + (-j) - 1];
}

std::vector<int> SpectrumB::elliptic_indices() const {
    std::vector<int> out;
    for (int j = 1; j <= N_L; ++j) {
        out.push_back(-j);
        out.push_back(j);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<int>> group_elliptic_by_pair(const SpectrumB& sp,
                                                     const CriticalLength& cl) {
    std::vector<int> free_idx;
    for (int j = 1; j <= sp.N_L; ++j) free_idx.push_back(j);
    auto take_nearest = [&](double lam_pred) {
        int best = -1;
        double bd = 1e300;
        for (std::size_t i = 0; i < free_idx.size(); ++i) {
            const double d = std::abs(sp.mode(free_idx[i]).lambda - lam_pred);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(i);
            }
        }
        if (best < 0)
            throw std::runtime_error("group_elliptic_by_pair: elliptic index set exhausted");
        const int j = free_idx[best];
        free_idx.erase(free_idx.begin() + best);
        return j;
    };
    std::vector<std::vector<int>> groups;
    for (const auto& p : cl.pairs) {
        if (p.kind == PairKind::S1) {
            groups.push_back({take_nearest(0.0)});
        } else if (p.kind == PairKind::S2) {
            const auto pm = perturbation_prediction_split(p, cl.L0, sp.L);
            int a = take_nearest(pm[0]);
            int b2 = take_nearest(pm[1]);
            if (a > b2) std::swap(a, b2);
            groups.push_back({a, b2});
        } else {
            groups.push_back({take_nearest(perturbation_prediction_quadratic(p, cl.L0, sp.L))});
        }
    }
    return groups;
}

SpectrumB full_spectrum(double L, int jmax, const SpectrumOptions& opt) {
    if (!(L > 0.0) || jmax < 1) throw std::invalid_argument("full_spectrum: bad arguments");
    if (classify_length(L))
        throw std::invalid_argument("full_spectrum: length is critical; spectrum degenerates");

    auto F = [&](double t) { return char_elliptic(t, L); };

    // ---- elliptic roots ---------------------------------------------------
    const double eps = 1e-9;
    const double a = -kEllThreshold + eps, b = kEllThreshold - eps;
    const double ic = 3.0 * std::pow(L / (2.0 * M_PI), 2);
    const int cells = std::max(opt.min_scan_cells, 4 * (3 + static_cast<int>(std::ceil(ic))));
    std::vector<double> taus;
    for (auto [xl, xr] : scan_brackets(F, a, b, cells)) {
        double t = (xl == xr) ? xl : bisect(F, xl, xr, opt.bisect_tol);
        t = newton_polish(F, [&](double u) { return char_elliptic_dt(u, L); }, t,
                          opt.newton_steps);
        taus.push_back(t);
    }

    // Near a critical length the split roots sit closer than any uniform scan
    // resolves; add brackets around the perturbation predictions.
    if (auto cl = nearest_critical(L, opt.critical_refine_offset)) {
        std::vector<double> lam_pred;
        for (const auto& p : cl->pairs) {
            if (p.kind == PairKind::S3) {
                lam_pred.push_back(perturbation_prediction_quadratic(p, cl->L0, L));
            } else {
                auto pm = perturbation_prediction_split(p, cl->L0, L);
                lam_pred.push_back(pm[0]);
                lam_pred.push_back(pm[1]);
            }
        }
        const std::size_t n0 = lam_pred.size();
        for (std::size_t i = 0; i < n0; ++i) lam_pred.push_back(-lam_pred[i]);
        const double d = std::abs(L - cl->L0);
        for (double lp : lam_pred) {
            if (std::abs(lp) >= 2.0 * std::sqrt(3.0) / 9.0) continue;
            for (double tc : tau_siblings(lp)) {
                if (3.0 * tc * tc >= 1.0 - 1e-12) continue;
                const double w0 = std::max(1e-12, 1e-3 * std::max(d, 1e-6));
                auto br = expand_bracket(F, tc, w0, 0.05);
                if (!br) continue;
                double t = bisect(F, br->first, br->second, opt.bisect_tol);
                t = newton_polish(F, [&](double u) { return char_elliptic_dt(u, L); }, t,
                                  opt.newton_steps);
                taus.push_back(t);
            }
        }
    }

    // drop the trivial roots +-sqrt(3)/6 and deduplicate in tau
    std::erase_if(taus, [&](double t) {
        return std::abs(std::abs(t) - kTrivialTau) < opt.trivial_exclusion ||
               !(3.0 * t * t < 1.0);
    });
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-11; }),
               taus.end());

    // deduplicate in lambda: each eigenvalue appears through three tau roots
    std::vector<double> lams;
    for (double t : taus) {
        const double lam = lambda_of_tau(t);
        bool dup = false;
        for (double l0 : lams)
            if (std::abs(l0 - lam) < 1e-9 * (1.0 + std::abs(lam))) dup = true;
        if (!dup) lams.push_back(lam);
    }
    std::sort(lams.begin(), lams.end());
    for (double lam : lams)
        if (std::abs(lam) < opt.degeneracy_guard)
            throw std::runtime_error("full_spectrum: eigenvalue at 0; length is effectively critical");
    for (std::size_t i = 1; i < lams.size(); ++i)
        if (lams[i] - lams[i - 1] < opt.degeneracy_guard)
            throw std::runtime_error("full_spectrum: near-degenerate eigenvalues; length is effectively critical");

    std::vector<double> lam_pos;
    for (double lam : lams)
        if (lam > 0.0) lam_pos.push_back(lam);
    const int n_l = static_cast<int>(lam_pos.size());
    if (2 * n_l != static_cast<int>(lams.size()))
        throw std::runtime_error("full_spectrum: elliptic spectrum lost sign symmetry");
    jmax = std::max(jmax, n_l);  // always carry the whole elliptic block

    // ---- hyperbolic roots -------------------------------------------------
    const int need = jmax - n_l;
    std::vector<double> tau_hyp;
    if (need > 0) {
        auto FH = [&](double t) { return char_hyperbolic(t, L); };
        const double t0 = kEllThreshold + 2e-9;
        const double tmax = (need + 5) * M_PI / L + 2.0;
        const int ncell = static_cast<int>(std::ceil((tmax - t0) / (M_PI / (8.0 * L))));
        for (auto [xl, xr] : scan_brackets(FH, t0, tmax, ncell)) {
            double t = (xl == xr) ? xl : bisect(FH, xl, xr, opt.bisect_tol);
            // secant polish (no closed-form derivative kept for this branch)
            for (int i = 0; i < 3; ++i) {
                const double h = 1e-8 * (1.0 + std::abs(t));
                const double d = (FH(t + h) - FH(t - h)) / (2.0 * h);
                if (d == 0.0) break;
                t -= FH(t) / d;
            }
            tau_hyp.push_back(t);
            if (static_cast<int>(tau_hyp.size()) >= need) break;
        }
        if (static_cast<int>(tau_hyp.size()) < need) {
            std::ostringstream os;
            os << "full_spectrum: hyperbolic bracketing found " << tau_hyp.size() << " roots in ["
               << t0 << ", " << tmax << "), need " << need;
            throw std::runtime_error(os.str());
        }
    }

    // ---- assemble ----------------------------------------------------------
    SpectrumB sp;
    sp.L = L;
    sp.jmax = jmax;
    sp.N_L = n_l;
    sp.modes.resize(2 * jmax);
    for (int j = 1; j <= jmax; ++j) {
        EigenmodeB m;
        if (j <= n_l) {
            const double lam = lam_pos[j - 1];
            m = build_elliptic_mode(0.0, lam, L, opt);
        } else {
            m = build_hyperbolic_mode(tau_hyp[j - n_l - 1], L, opt);
        }
        m.index = j;
        sp.modes[j - 1] = m;

        EigenmodeB neg = m;
        neg.index = -j;
        neg.conjugated = true;
        neg.lambda = -m.lambda;
        neg.tau = -m.tau;
        neg.dE_at_L = std::conj(m.dE_at_L);
        sp.modes[jmax + j - 1] = neg;
    }
    return sp;
}

}  // namespace kdv
