#include "kdv/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kdv/quadrature.hpp"
#include "kdv/smallsolve.hpp"

namespace kdv {

namespace {

const cplx kI{0.0, 1.0};

cplx h_coeff(const EigenmodeB& m) { return -std::conj(m.dE_at_L) / (kI * m.lambda); }

// <h_mu, E_k> = -conj(E'_k(L)) / (mu + i lambda_k); cross-checked against
// quadrature in the test suite.
cplx hmu_mode_inner(double mu, const EigenmodeB& m) {
    return -std::conj(m.dE_at_L) / (mu + kI * m.lambda);
}

// bilinear pairings <g, F(L-.)> used by T_rho
cplx bil_hmu(const ModulatedFunction& h, const EigenmodeA& f) {
    return f.dF_at_0 * eval_h(h, h.L, 1) / (f.zeta + h.mu);
}
cplx bil_mode(const EigenmodeB& m, const EigenmodeA& f) {
    return f.dF_at_0 * m.dE_at_L / (f.zeta - kI * m.lambda);
}

}  // namespace

ProjectionResult project(const GridFunction& f, const SpectrumB& sp, int K) {
    if (K < 1 || K > sp.jmax) throw std::invalid_argument("project: K out of range");
    double tau_max = 0.0;
    for (int j = 1; j <= K; ++j) tau_max = std::max(tau_max, std::abs(sp.mode(j).tau));
    const double xi_max = 3.0 * std::max(tau_max, 1.0);
    const int n_min = static_cast<int>(std::ceil(8.0 * f.L * xi_max / (2.0 * M_PI)));
    if (f.n < n_min) {
        std::ostringstream os;
        os << "project: grid under-resolved; need n >= " << n_min << " for K = " << K;
        throw std::invalid_argument(os.str());
    }
    ProjectionResult out;
    out.state = SpectralState::zero(f.L, K);
    const double dx = f.dx();
    for (int sgn : {1, -1})
        for (int jj = 1; jj <= K; ++jj) {
            const int j = sgn * jj;
            const EigenmodeB& m = sp.mode(j);
            std::vector<cplx> prod(f.v.size());
            for (std::size_t i = 0; i < f.v.size(); ++i)
                prod[i] = f.v[i] * std::conj(eval_eigenfunction(m, i * dx, 0));
            out.state.at(j) = simpson(std::span<const cplx>(prod), dx);
        }
    double sum2 = 0.0;
    for (const auto& z : out.state.z) sum2 += std::norm(z);
    const double n2 = f.norm2();
    out.parseval_defect = n2 * n2 - sum2;
    return out;
}

VControl synthesize_v(const SpectralState& z0, const SpectralState& zT,
                      const BiorthogonalFamily& fam, const SpectrumB& sp) {
    if (z0.K > fam.K_trunc || zT.K > fam.K_trunc)
        throw std::invalid_argument("synthesize_v: state truncation exceeds the family");
    const double T = fam.T;
    const double scale = std::max(z0.norm(), 1e-300);

    auto z0_at = [&](int j) { return std::abs(j) <= z0.K ? z0.at(j) : cplx{0.0, 0.0}; };
    auto zT_at = [&](int j) { return std::abs(j) <= zT.K ? zT.at(j) : cplx{0.0, 0.0}; };

    VControl vc;
    vc.T = T;
    vc.v.assign(fam.tgrid.size(), cplx{0.0, 0.0});

    for (const auto& fn : fam.fns) {
        cplx coeff{0.0, 0.0};
        if (fn.kind == FamilyFn::Kind::Plain) {
            const int k = fn.key;
            const EigenmodeB& m = sp.mode(k);
            const cplx num = z0_at(k) * std::exp(kI * m.lambda * T / 2.0) -
                             zT_at(k) * std::exp(-kI * m.lambda * T / 2.0);
            const cplx den = kI * h_coeff(m) * m.lambda;  // = -conj(E'_k(L))
            if (std::abs(den) < 1e-10 && std::abs(num) > 1e-12 * scale) {
                std::ostringstream os;
                os << "synthesize_v: uncontrollable direction j = " << k
                   << " (|E'(L)| = " << std::abs(den) << " with nonzero data)";
                throw std::runtime_error(os.str());
            }
            coeff = (std::abs(den) < 1e-300) ? cplx{0.0, 0.0} : num / den;
        } else {
            // compensated pair: least squares over the pair's moment equations
            const CompensationInfo* ci = nullptr;
            for (const auto& c : fam.comps)
                if (c.indices[0] == fn.key || c.indices[0] == -fn.key) ci = &c;
            if (!ci) throw std::runtime_error("synthesize_v: dangling compensation");
            std::array<int, 2> idx = ci->indices;
            std::array<cplx, 2> gain{cplx{1.0, 0.0}, cplx{1.0, 0.0}};
            if (fn.kind == FamilyFn::Kind::ThetaS2Pos) {
                gain[1] = ci->aL;
            } else if (fn.kind == FamilyFn::Kind::ThetaS2Neg) {
                idx = {-ci->indices[0], -ci->indices[1]};
                gain[1] = ci->aL;
            }
            cplx num{0.0, 0.0};
            double den = 0.0;
            for (int q = 0; q < 2; ++q) {
                const int k = idx[q];
                const EigenmodeB& m = sp.mode(k);
                const cplx a = -std::conj(m.dE_at_L) * std::exp(kI * m.lambda * T / 2.0) * gain[q];
                const cplx b =
                    z0_at(k) * std::exp(kI * m.lambda * T) - zT_at(k);
                num += std::conj(a) * b;
                den += std::norm(a);
            }
            if (den < 1e-20 && std::abs(num) > 1e-12 * scale)
                throw std::runtime_error("synthesize_v: uncontrollable compensated pair");
            coeff = (den < 1e-300) ? cplx{0.0, 0.0} : -num / den;
        }
        if (coeff != cplx{0.0, 0.0})
            for (std::size_t m = 0; m < vc.v.size(); ++m) vc.v[m] += coeff * fn.samples[m];
    }
    vc.v.front() = cplx{0.0, 0.0};
    vc.v.back() = cplx{0.0, 0.0};
    return vc;
}

std::map<int, cplx> moment_residuals(const VControl& v, const SpectrumB& sp,
                                     const SpectralState& z0, const SpectralState& zT,
                                     int K_check) {
    const double T = v.T;
    const std::size_t nt = v.v.size();
    const double ds = T / static_cast<double>(nt - 1);
    std::map<int, cplx> out;
    for (int sgn : {1, -1})
        for (int jj = 1; jj <= K_check; ++jj) {
            const int j = sgn * jj;
            const EigenmodeB& m = sp.mode(j);
            std::vector<cplx> f(nt);
            for (std::size_t i = 0; i < nt; ++i)
                f[i] = v.v[i] * std::exp(cplx(0.0, -m.lambda * ds * static_cast<double>(i)));
            const cplx I = simpson(std::span<const cplx>(f), ds);
            const cplx z0j = std::abs(j) <= z0.K ? z0.at(j) : cplx{0.0, 0.0};
            const cplx zTj = std::abs(j) <= zT.K ? zT.at(j) : cplx{0.0, 0.0};
            const cplx hj = h_coeff(m);
            out[j] = z0j * std::exp(kI * m.lambda * T) - zTj -
                     kI * m.lambda * hj * std::exp(kI * m.lambda * T) * I;
        }
    return out;
}

namespace {

// One-sided boundary data on the grid (order-4 first derivative; the
// composite d_x P y trace uses order-4 second plus order-2 fourth stencils).
double dx_at_0(const GridFunction& y) {
    const double h = y.dx();
    return (-25.0 * y.v[0] + 48.0 * y.v[1] - 36.0 * y.v[2] + 16.0 * y.v[3] - 3.0 * y.v[4]) /
           (12.0 * h);
}
double dx_at_L(const GridFunction& y) {
    const double h = y.dx();
    const int n = y.n;
    return (25.0 * y.v[n] - 48.0 * y.v[n - 1] + 36.0 * y.v[n - 2] - 16.0 * y.v[n - 3] +
            3.0 * y.v[n - 4]) /
           (12.0 * h);
}
double dxP_at(const GridFunction& y, bool left) {
    const double h = y.dx();
    auto at = [&](int i) { return left ? y.v[i] : y.v[y.n - i]; };
    // even-order derivatives are mirror-invariant, so one stencil serves both ends
    const double d2 = (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) +
                       61.0 * at(4) - 10.0 * at(5)) /
                      (12.0 * h * h);
    const double d4 =
        (3.0 * at(0) - 14.0 * at(1) + 26.0 * at(2) - 24.0 * at(3) + 11.0 * at(4) - 2.0 * at(5)) /
        (h * h * h * h);
    return d4 + d2;  // (y''' + y')' = y'''' + y''
}

struct BoundaryData {
    double jump_dx;   // d_x y(L) - d_x y(0)
    double jump_dxP;  // d_x P y(L) - d_x P y(0)
};

// A differentiated eigenfunction series cannot carry two distinct boundary
// traces (E'_j(0) = E'_j(L)), so the jumps always come from one-sided grid
// stencils.
BoundaryData boundary_data(const GridFunction& y) {
    return {dx_at_L(y) - dx_at_0(y), dxP_at(y, false) - dxP_at(y, true)};
}

}  // namespace

TransitionCoeffs transition_Tc(const GridFunction& y_half, TransitionVariant var,
                               const std::vector<double>& mus, double L,
                               const QuasiInvariantBasis* basis, const SpectrumB* sp) {
    const std::size_t nmu = mus.size();
    for (std::size_t i = 0; i < nmu; ++i)
        for (std::size_t j = i + 1; j < nmu; ++j)
            if (std::abs(mus[i] - mus[j]) < 1e-12)
                throw std::invalid_argument("transition_Tc: mus must be distinct");
    if (var == TransitionVariant::Basic2 && nmu != 2)
        throw std::invalid_argument("transition_Tc: Basic2 needs exactly two mus");
    if (var == TransitionVariant::Refined) {
        if (!basis || !sp)
            throw std::invalid_argument("transition_Tc: Refined needs the basis and spectrum");
        const std::size_t expected = basis->critical.N0 + 2;
        if (nmu != expected) {
            std::ostringstream os;
            os << "transition_Tc: Refined at this critical length needs " << expected << " mus";
            throw std::invalid_argument(os.str());
        }
    }

    const BoundaryData bd = boundary_data(y_half);
    std::vector<std::vector<double>> A;
    std::vector<double> rhs;
    {
        std::vector<double> row(nmu, 1.0);
        A.push_back(row);
        rhs.push_back(bd.jump_dx);
        for (std::size_t j = 0; j < nmu; ++j) row[j] = mus[j];
        A.push_back(row);
        rhs.push_back(bd.jump_dxP);
    }

    ProjectionResult pr;
    if (var == TransitionVariant::Refined) {
        pr = project(y_half, *sp, std::min(sp->jmax, 12));
        // one projection row per pair: S1 contributes its real part only,
        // S2/S3 contribute the complex row of the positive-side direction
        std::size_t dir_pos = 0;
        for (const auto& p : basis->critical.pairs) {
            const ModeCombination& dir = basis->basis_B[dir_pos];
            dir_pos += (p.kind == PairKind::S1) ? 1 : 2;
            std::vector<cplx> hrow(nmu, cplx{0.0, 0.0});
            cplx zproj{0.0, 0.0};
            for (const auto& [k, d] : dir.coeff) {
                const EigenmodeB& m = sp->mode(k);
                for (std::size_t j = 0; j < nmu; ++j)
                    hrow[j] += std::conj(d) * hmu_mode_inner(mus[j], m);
                zproj += std::conj(d) * pr.state.at(k);
            }
            std::vector<double> re(nmu), im(nmu);
            for (std::size_t j = 0; j < nmu; ++j) {
                re[j] = hrow[j].real();
                im[j] = hrow[j].imag();
            }
            A.push_back(re);
            rhs.push_back(zproj.real());
            if (p.kind != PairKind::S1) {
                A.push_back(im);
                rhs.push_back(zproj.imag());
            }
        }
    }
    if (A.size() != nmu) {
        std::ostringstream os;
        os << "transition_Tc: system has " << A.size() << " rows for " << nmu << " unknowns";
        throw std::runtime_error(os.str());
    }
    const auto sol = solve_dense(A, rhs);

    TransitionCoeffs tc;
    tc.c = sol.x;
    tc.mus = mus;
    tc.cond = sol.cond1;
    // post-hoc residual: boundary jumps of z0 = y - sum c_j h_mu_j
    GridFunction z0 = y_half;
    std::vector<ModulatedFunction> hs;
    for (double mu : mus) hs.push_back(solve_h_mu(mu, L));
    for (std::size_t j = 0; j < nmu; ++j)
        for (int i = 0; i <= z0.n; ++i) z0.v[i] -= tc.c[j] * eval_h(hs[j], i * z0.dx(), 0);
    const BoundaryData bz = boundary_data(z0);
    tc.residual = std::max(std::abs(bz.jump_dx), std::abs(bz.jump_dxP));
    return tc;
}

std::vector<cplx> transition_Trho(const TransitionCoeffs& tc, const QuasiInvariantBasis& basis,
                                  const SpectrumB& sp, double T) {
    const std::size_t nz = basis.basis_A.size();
    const std::size_t ng = basis.good_dirs.size();
    if (nz == 0 || nz != ng)
        throw std::invalid_argument("transition_Trho: basis sizes do not match");
    std::vector<ModulatedFunction> hs;
    for (double mu : tc.mus) hs.push_back(solve_h_mu(mu, basis.L));

    std::vector<std::vector<cplx>> M(nz, std::vector<cplx>(ng));
    std::vector<cplx> rhs(nz);
    for (std::size_t i = 0; i < nz; ++i) {
        const EigenmodeA& f = basis.basis_A[i];
        for (std::size_t m = 0; m < ng; ++m) {
            cplx acc{0.0, 0.0};
            for (const auto& [k, d] : basis.good_dirs[m].coeff)
                acc += d * bil_mode(sp.mode(k), f);
            M[i][m] = acc;
        }
        cplx b{0.0, 0.0};
        for (std::size_t j = 0; j < tc.mus.size(); ++j)
            b += tc.c[j] * std::exp(-tc.mus[j] * T / 2.0) * bil_hmu(hs[j], f);
        rhs[i] = -b;
        const double denom_scale = std::abs(f.dF_at_0);
        if (denom_scale < 1e-300)
            throw std::runtime_error("transition_Trho: vanishing F'(0) denominator");
    }
    return solve_dense(M, rhs).x;
}

SpectralState good_direction_state(const std::vector<cplx>& rho,
                                   const QuasiInvariantBasis& basis, double L, int K) {
    SpectralState s = SpectralState::zero(L, K);
    if (rho.size() != basis.good_dirs.size())
        throw std::invalid_argument("good_direction_state: size mismatch");
    for (std::size_t m = 0; m < rho.size(); ++m)
        for (const auto& [k, d] : basis.good_dirs[m].coeff)
            if (std::abs(k) <= K) s.at(k) += rho[m] * d;
    return s;
}

std::vector<double> assemble_u(const std::vector<double>& times,
                               const std::vector<double>& dxz_trace,
                               const TransitionCoeffs& tc,
                               const std::vector<ModulatedFunction>& hs, double half_shift) {
    if (times.size() != dxz_trace.size())
        throw std::invalid_argument("assemble_u: size mismatch");
    if (hs.size() != tc.c.size()) throw std::invalid_argument("assemble_u: coefficient mismatch");
    std::vector<double> u(times.size(), 0.0);
    for (std::size_t m = 0; m < times.size(); ++m) {
        if (times[m] < half_shift - 1e-14) continue;
        double val = dxz_trace[m];
        for (std::size_t j = 0; j < hs.size(); ++j)
            val += tc.c[j] * std::exp(-hs[j].mu * (times[m] - half_shift)) *
                   eval_h(hs[j], hs[j].L, 1);
        u[m] = val;
    }
    return u;
}

ControlPlan iteration_schedule(double T, double Q, int n_max) {
    if (!(T > 0.0) || !(Q > 0.0) || n_max < 1)
        throw std::invalid_argument("iteration_schedule: bad arguments");
    ControlPlan plan;
    plan.T = T;
    plan.Q = Q;
    plan.n0_exponent = -std::log2(T);
    double prev = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        ControlInterval iv;
        iv.t0 = prev;
        iv.t1 = T * (1.0 - std::pow(2.0, -n));
        iv.mu1 = Q * std::pow(2.0, 1.5 * (plan.n0_exponent + n));
        prev = iv.t1;
        plan.intervals.push_back(iv);
    }
    return plan;
}

StabilizationResult run_transition_stabilization(const GridFunction& y0, double T,
                                                 const StabilizationParams& params, double L,
                                                 std::optional<double> L0) {
    StabilizationResult res;
    res.plan = iteration_schedule(T, params.Q, params.n_max);

    const SpectrumB sp = full_spectrum(L, params.jmax);
    std::optional<QuasiInvariantBasis> qb;
    std::optional<CriticalLength> cl;
    if (params.variant == TransitionVariant::Refined) {
        if (L0)
            cl = classify_length(*L0);
        else
            cl = nearest_critical(L, 0.35);
        if (!cl)
            throw std::invalid_argument(
                "run_transition_stabilization: refined variant needs a critical L0");
        qb = quasi_invariant_basis(L, *cl, sp);
    }

    GridFunction y = y0;
    const double norm0 = y0.norm2();
    for (std::size_t iv = 0; iv < res.plan.intervals.size(); ++iv) {
        ControlInterval& interval = res.plan.intervals[iv];
        const double dT = interval.t1 - interval.t0;
        const double half = 0.5 * dT;
        const double norm_in = y.norm2();

        // step counts: interval grid divisible by 4 so the half grid is odd
        int steps = std::max(8, static_cast<int>(std::llround(dT / params.dt)));
        steps = ((steps + 3) / 4) * 4;
        const double dte = dT / steps;
        const int half_steps = steps / 2;

        // 1. free flow on the first half
        Trajectory fr = simulate_adjoint(y, half, params.grid_n, dte);
        GridFunction y_half = fr.states.back();

        // 2. transition T_c
        std::vector<double> mus;
        if (params.variant == TransitionVariant::Basic2) {
            mus = {interval.mu1, 2.0 * interval.mu1};
        } else {
            const int n0 = qb->critical.N0;
            for (int j = 1; j <= n0 + 2; ++j) mus.push_back(j * interval.mu1);
        }
        const TransitionCoeffs tc = transition_Tc(
            y_half, params.variant, mus, L,
            params.variant == TransitionVariant::Refined ? &*qb : nullptr, &sp);
        std::vector<ModulatedFunction> hs;
        for (double mu : mus) hs.push_back(solve_h_mu(mu, L));
        GridFunction z0g = y_half;
        for (std::size_t j = 0; j < mus.size(); ++j)
            for (int i = 0; i <= z0g.n; ++i)
                z0g.v[i] -= tc.c[j] * eval_h(hs[j], i * z0g.dx(), 0);

        // 3. project and synthesize the intermediate control on [0, half]
        const auto pr = project(z0g, sp, params.K_trunc);
        FamilyOptions fo = params.family;
        fo.time_samples = half_steps;  // made odd inside build_family
        const auto fam = build_family(sp, half, params.K_trunc,
                                      params.variant == TransitionVariant::Refined
                                          ? cl
                                          : std::optional<CriticalLength>{},
                                      fo);
        SpectralState zT = SpectralState::zero(L, params.K_trunc);
        if (params.variant == TransitionVariant::Refined) {
            const auto rho = transition_Trho(tc, *qb, sp, dT);
            zT = good_direction_state(rho, *qb, L, params.K_trunc);
        }
        const VControl v = synthesize_v(pr.state, zT, fam, sp);
        double mres = 0.0;
        for (const auto& [j, r] : moment_residuals(v, sp, pr.state, zT, params.K_check))
            mres = std::max(mres, std::abs(r));
        interval.moment_residual = mres;

        // 4. boundary trace of the z-run and the physical control u
        const auto ztraj = modal_trajectory(pr.state, v.v, half, sp);
        std::vector<double> times(steps + 1), trace(steps + 1, 0.0);
        for (int m = 0; m <= steps; ++m) times[m] = m * dte;
        for (int m = 0; m <= half_steps; ++m) {
            cplx val{0.0, 0.0};
            for (int sgn : {1, -1})
                for (int jj = 1; jj <= params.K_trunc; ++jj)
                    val += ztraj[m].at(sgn * jj) * sp.mode(sgn * jj).dE_at_L;
            trace[half_steps + m] = val.real();
        }
        interval.u = assemble_u(times, trace, tc, hs, half);

        // 5. FD verification over the whole interval
        const Trajectory run = simulate(y, interval.u, dT, params.grid_n, dte);
        y = run.states.back();
        interval.energy_ratio = y.norm2() / std::max(norm_in, 1e-300);

        if (params.variant == TransitionVariant::Refined) {
            double defect = 0.0;
            std::vector<cplx> u(y.v.size());
            for (std::size_t q = 0; q < u.size(); ++q) u[q] = y.v[q];
            for (const auto& fm : qb->basis_A)
                defect = std::max(defect, std::abs(duality_pairing_grid(u, L, fm)));
            interval.hA_defect = defect;
        }
    }
    res.y_final = y;
    res.total_ratio = y.norm2() / std::max(norm0, 1e-300);
    return res;
}

}  // namespace kdv
