#include "kdv/simulator.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kdv/fit.hpp"
#include "kdv/quadrature.hpp"
#include "kdv/smallsolve.hpp"

namespace kdv {

GridFunction GridFunction::zeros(double L, int n) {
    GridFunction g;
    g.L = L;
    g.n = n;
    g.v.assign(n + 1, 0.0);
    return g;
}

GridFunction GridFunction::sample(double L, int n, const std::function<double(double)>& f) {
    GridFunction g = zeros(L, n);
    for (int i = 0; i <= n; ++i) g.v[i] = f(L * i / n);
    return g;
}

double GridFunction::norm2() const {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    return std::sqrt(simpson(std::span<const double>(sq), dx()));
}

// ---------------------------------------------------------------------------

struct LinearStepper::Impl {
    double L, dtv, dxv;
    int n;
    Eigen::SparseMatrix<double> B;             // I - dt/2 D
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;  // factors I + dt/2 D
    double ghost_coeff;                        // boundary source weight (row n-1)
};

namespace {

// Rows of the discrete operator D = d_xxx + d_x on the interior unknowns.
std::vector<Eigen::Triplet<double>> assemble_D(int n, double h) {
    std::vector<Eigen::Triplet<double>> trip;
    const double c3 = 1.0 / (2.0 * h * h * h);
    const double c1 = 1.0 / (2.0 * h);
    auto add = [&](int row, int col, double val) {
        if (col >= 1 && col <= n - 1) trip.emplace_back(row - 1, col - 1, val);
    };
    // i = 1: one-sided third derivative (third-order biased stencil at node 1)
    add(1, 1, 10.0 * c3);
    add(1, 2, -12.0 * c3);
    add(1, 3, 6.0 * c3);
    add(1, 4, -1.0 * c3);
    add(1, 2, c1);
    for (int i = 2; i <= n - 2; ++i) {
        add(i, i + 2, c3);
        add(i, i + 1, -2.0 * c3);
        add(i, i - 1, 2.0 * c3);
        add(i, i - 2, -c3);
        add(i, i + 1, c1);
        add(i, i - 1, -c1);
    }
    // i = n-1: centered stencil with the ghost eliminated through
    // y_{n+1} = y_{n-1} + 2 h u and y_n = 0
    add(n - 1, n - 1, c3);
    add(n - 1, n - 2, 2.0 * c3);
    add(n - 1, n - 3, -c3);
    add(n - 1, n - 2, -c1);
    return trip;
}

}  // namespace

LinearStepper::LinearStepper(double L, int n, double dt) : impl_(new Impl) {
    if (n < 256) throw std::invalid_argument("LinearStepper: n must be >= 256");
    if (!(dt > 0.0)) throw std::invalid_argument("LinearStepper: dt must be positive");
    impl_->L = L;
    impl_->n = n;
    impl_->dtv = dt;
    impl_->dxv = L / n;
    const int m = n - 1;
    auto trip = assemble_D(n, impl_->dxv);
    Eigen::SparseMatrix<double> D(m, m);
    D.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<double> I(m, m);
    I.setIdentity();
    Eigen::SparseMatrix<double> A = I + (dt / 2.0) * D;
    impl_->B = I - (dt / 2.0) * D;
    impl_->lu.compute(A);
    if (impl_->lu.info() != Eigen::Success)
        throw std::runtime_error("LinearStepper: singular banded system (bad grid/dt)");
    impl_->ghost_coeff = 1.0 / (impl_->dxv * impl_->dxv);  // (2 h u)/(2 h^3)
}

LinearStepper::~LinearStepper() = default;
LinearStepper::LinearStepper(LinearStepper&&) noexcept = default;
double LinearStepper::dt() const { return impl_->dtv; }

GridFunction LinearStepper::step_with_forcing(const GridFunction& y, double u_now, double u_next,
                                              const std::vector<double>& forcing) const {
    const int n = impl_->n, m = n - 1;
    Eigen::VectorXd yi(m);
    for (int i = 1; i <= m; ++i) yi[i - 1] = y.v[i];
    Eigen::VectorXd rhs = impl_->B * yi;
    rhs[m - 1] -= impl_->dtv * 0.5 * impl_->ghost_coeff * (u_now + u_next);
    if (!forcing.empty()) {
        if (static_cast<int>(forcing.size()) != m)
            throw std::invalid_argument("step_with_forcing: bad forcing size");
        for (int i = 0; i < m; ++i) rhs[i] += forcing[i];
    }
    Eigen::VectorXd yn = impl_->lu.solve(rhs);
    GridFunction out = GridFunction::zeros(y.L, n);
    for (int i = 1; i <= m; ++i) out.v[i] = yn[i - 1];
    return out;
}

GridFunction LinearStepper::step(const GridFunction& y, double u_now, double u_next) const {
    return step_with_forcing(y, u_now, u_next, {});
}

namespace {

double trace_dx0(const GridFunction& y) { return (4.0 * y.v[1] - y.v[2]) / (2.0 * y.dx()); }
double trace_dxL(const GridFunction& y) {
    const int n = y.n;
    return (3.0 * y.v[n] - 4.0 * y.v[n - 1] + y.v[n - 2]) / (2.0 * y.dx());
}

Trajectory run_linear(const GridFunction& y0, const std::vector<double>* u, double T, int n,
                      double dt, const SimOptions& opt) {
    int steps = std::max(2, static_cast<int>(std::llround(T / dt)));
    if (steps % 2) ++steps;  // even step count -> odd sample count for Simpson
    const double dte = T / steps;
    LinearStepper st(y0.L, n, dte);
    if (u && static_cast<int>(u->size()) != steps + 1)
        throw std::invalid_argument("simulate: u_samples must have round(T/dt)+1 entries");

    Trajectory tr;
    GridFunction y = y0;
    for (int m = 0; m <= steps; ++m) {
        tr.times.push_back(m * dte);
        tr.energy.push_back(y.norm2() * y.norm2());
        tr.dx0.push_back(trace_dx0(y));
        tr.dxL.push_back(trace_dxL(y));
        if (opt.store_every > 0 && m % opt.store_every == 0) {
            tr.states.push_back(y);
            tr.state_times.push_back(m * dte);
        }
        if (m == steps) break;
        const double un = u ? (*u)[m] : 0.0;
        const double up = u ? (*u)[m + 1] : 0.0;
        y = st.step(y, un, up);
    }
    tr.states.push_back(y);
    tr.state_times.push_back(T);
    std::vector<double> tr2(tr.dx0.size());
    for (std::size_t i = 0; i < tr2.size(); ++i) tr2[i] = tr.dx0[i] * tr.dx0[i];
    const double absorbed = 2.0 * simpson(std::span<const double>(tr2), dte);
    tr.energy_identity_defect =
        u ? 0.0 : std::abs(tr.energy.front() - tr.energy.back() - absorbed);
    return tr;
}

}  // namespace

Trajectory simulate(const GridFunction& y0, const std::vector<double>& u_samples, double T,
                    int n, double dt, const SimOptions& opt) {
    return run_linear(y0, &u_samples, T, n, dt, opt);
}

Trajectory simulate_adjoint(const GridFunction& y0, double T, int n, double dt,
                            const SimOptions& opt) {
    return run_linear(y0, nullptr, T, n, dt, opt);
}

Trajectory simulate_nonlinear(const GridFunction& y0, double T, int n, double dt,
                              const SimOptions& opt) {
    int steps = std::max(2, static_cast<int>(std::llround(T / dt)));
    if (steps % 2) ++steps;
    const double dte = T / steps;
    LinearStepper st(y0.L, n, dte);
    const int m = n - 1;
    const double h = y0.L / n;

    auto nonlin = [&](const GridFunction& y) {
        // conservative form of y y_x = (y^2/2)_x
        std::vector<double> N(m);
        for (int i = 1; i <= m; ++i) {
            const double yp = y.v[i + 1], ym = y.v[i - 1];
            N[i - 1] = (yp * yp - ym * ym) / (4.0 * h);
        }
        return N;
    };

    Trajectory tr;
    GridFunction y = y0;
    const double n0 = y0.norm2();
    std::vector<double> Nprev;
    for (int k = 0; k <= steps; ++k) {
        tr.times.push_back(k * dte);
        tr.energy.push_back(y.norm2() * y.norm2());
        tr.dx0.push_back(trace_dx0(y));
        tr.dxL.push_back(trace_dxL(y));
        if (opt.store_every > 0 && k % opt.store_every == 0) {
            tr.states.push_back(y);
            tr.state_times.push_back(k * dte);
        }
        if (k == steps) break;
        std::vector<double> Ncur = nonlin(y);
        std::vector<double> force(m);
        for (int i = 0; i < m; ++i) {
            const double ab =
                Nprev.empty() ? Ncur[i] : 1.5 * Ncur[i] - 0.5 * Nprev[i];
            force[i] = -dte * ab;
        }
        y = st.step_with_forcing(y, 0.0, 0.0, force);
        Nprev = std::move(Ncur);
        if (y.norm2() > 2.0 * n0 + 1e-12) {
            std::ostringstream os;
            os << "simulate_nonlinear: blow-up detected at t = " << (k + 1) * dte;
            throw std::runtime_error(os.str());
        }
    }
    tr.states.push_back(y);
    tr.state_times.push_back(T);
    return tr;
}

double observability_ratio(double L, double T, const GridFunction& y0, int n, double dt) {
    Trajectory tr = simulate_adjoint(y0, T, n, dt);
    std::vector<double> tr2(tr.dx0.size());
    for (std::size_t i = 0; i < tr2.size(); ++i) tr2[i] = tr.dx0[i] * tr.dx0[i];
    const double den = 2.0 * simpson(std::span<const double>(tr2), tr.times[1] - tr.times[0]);
    const double num = tr.energy.front();
    // below the squared discretization noise of the boundary trace the datum
    // counts as unobservable
    if (den < 1e-8 * num) return std::numeric_limits<double>::infinity();
    return num / den;
}

// ---------------------------------------------------------------------------

cplx& SpectralState::at(int j) {
    if (j == 0 || std::abs(j) > K) throw std::out_of_range("SpectralState::at");
    return j > 0 ? z[j - 1] : z[K - j - 1];
}
const cplx& SpectralState::at(int j) const { return const_cast<SpectralState*>(this)->at(j); }
double SpectralState::norm() const {
    double s = 0.0;
    for (const auto& c : z) s += std::norm(c);
    return std::sqrt(s);
}
SpectralState SpectralState::zero(double L, int K) {
    SpectralState s;
    s.L = L;
    s.K = K;
    s.z.assign(2 * K, cplx{0.0, 0.0});
    return s;
}

namespace {

// h_j = -conj(E'_j(L)) / (i lambda_j): the modal coefficient of the lift.
cplx h_coeff(const EigenmodeB& m) {
    return -std::conj(m.dE_at_L) / (cplx(0.0, 1.0) * m.lambda);
}

// Exact step integrals against linear interpolation of v:
// int_0^dt e^{i la (dt - s)} v(t_m + s) ds = v_m a + v_{m+1} b.
std::pair<cplx, cplx> filon_weights(double lambda, double dt) {
    const cplx il(0.0, lambda);
    if (std::abs(lambda) * dt < 1e-3) {
        const cplx a = dt * (0.5 + il * dt / 3.0);
        const cplx b = dt * (0.5 + il * dt / 6.0);
        return {a, b};
    }
    const cplx E = std::exp(il * dt);
    const cplx i0 = (E - 1.0) / il;
    const cplx i1 = dt * E / il - (E - 1.0) / (il * il);
    return {i1 / dt, i0 - i1 / dt};
}

}  // namespace

std::vector<SpectralState> modal_trajectory(const SpectralState& z0,
                                            const std::vector<cplx>& v_samples, double T,
                                            const SpectrumB& sp) {
    const std::size_t nt = v_samples.size();
    if (nt < 2) throw std::invalid_argument("modal_trajectory: need >= 2 samples");
    const double dt = T / static_cast<double>(nt - 1);
    std::vector<SpectralState> out(nt, SpectralState::zero(z0.L, z0.K));
    for (int sgn : {1, -1}) {
        for (int jj = 1; jj <= z0.K; ++jj) {
            const int j = sgn * jj;
            const EigenmodeB& m = sp.mode(j);
            const cplx hj = h_coeff(m);
            const auto [wa, wb] = filon_weights(m.lambda, dt);
            const cplx rot = std::exp(cplx(0.0, m.lambda * dt));
            cplx D{0.0, 0.0};
            cplx phase{1.0, 0.0};
            out[0].at(j) = z0.at(j);
            for (std::size_t k = 0; k + 1 < nt; ++k) {
                D = rot * D + wa * v_samples[k] + wb * v_samples[k + 1];
                phase *= rot;
                out[k + 1].at(j) =
                    phase * z0.at(j) - cplx(0.0, m.lambda) * hj * D;
            }
        }
    }
    return out;
}

SpectralState modal_duhamel(const SpectralState& z0, const std::vector<cplx>& v_samples,
                            double T, const SpectrumB& sp) {
    return modal_trajectory(z0, v_samples, T, sp).back();
}

// ---------------------------------------------------------------------------

GridFunction m_direction_datum(double L, int n, const QuasiInvariantBasis& qb) {
    const EigenmodeA& f = qb.basis_A.front();
    GridFunction g = GridFunction::sample(L, n, [&](double x) { return eval_F(f, x, 0).real(); });
    const double nr = g.norm2();
    for (auto& v : g.v) v /= nr;
    return g;
}

GridFunction h_direction_datum(double L, int n, const QuasiInvariantBasis& qb,
                               const SpectrumB& sp) {
    GridFunction w = GridFunction::sample(L, n, [&](double x) {
        return eval_eigenfunction(sp.mode(sp.N_L + 1), x, 0).real();
    });
    // real spanning set of M_A
    std::vector<GridFunction> basis;
    for (const auto& fm : qb.basis_A) {
        GridFunction re = GridFunction::sample(
            L, n, [&](double x) { return eval_F(fm, x, 0).real(); });
        basis.push_back(re);
        GridFunction im = GridFunction::sample(
            L, n, [&](double x) { return eval_F(fm, x, 0).imag(); });
        if (im.norm2() > 1e-8) basis.push_back(im);
    }
    // duality constraints: <y, F_m(L-.)> = 0 for every A-mode
    const std::size_t nb = basis.size();
    auto dual = [&](const GridFunction& g, const EigenmodeA& fm) {
        std::vector<cplx> u(g.v.size());
        for (std::size_t i = 0; i < g.v.size(); ++i) u[i] = g.v[i];
        return duality_pairing_grid(u, L, fm);
    };
    std::vector<std::vector<double>> R;  // stacked real rows
    std::vector<double> rhs;
    for (const auto& fm : qb.basis_A) {
        std::vector<double> row_re(nb), row_im(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            const cplx p = dual(basis[b], fm);
            row_re[b] = p.real();
            row_im[b] = p.imag();
        }
        const cplx pw = dual(w, fm);
        R.push_back(row_re);
        rhs.push_back(pw.real());
        R.push_back(row_im);
        rhs.push_back(pw.imag());
    }
    // least squares via normal equations (tiny system)
    std::vector<std::vector<double>> ata(nb, std::vector<double>(nb, 0.0));
    std::vector<double> atb(nb, 0.0);
    for (std::size_t r = 0; r < R.size(); ++r)
        for (std::size_t a = 0; a < nb; ++a) {
            atb[a] += R[r][a] * rhs[r];
            for (std::size_t b = 0; b < nb; ++b) ata[a][b] += R[r][a] * R[r][b];
        }
    for (std::size_t a = 0; a < nb; ++a) ata[a][a] += 1e-14;
    const auto sol = solve_dense(ata, atb);
    GridFunction y = w;
    for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] -= sol.x[b] * basis[b].v[i];
    const double nr = y.norm2();
    for (auto& v : y.v) v /= nr;
    return y;
}

namespace {

double fit_energy_rate(const Trajectory& tr, double t_lo, double t_hi) {
    std::vector<double> ts, le;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (tr.times[i] < t_lo || tr.times[i] > t_hi) continue;
        if (tr.energy[i] <= 0.0) continue;
        ts.push_back(tr.times[i]);
        le.push_back(std::log(tr.energy[i]));
    }
    if (ts.size() < 4) throw std::runtime_error("fit_energy_rate: window too small");
    return -fit_line(ts, le).slope;
}

}  // namespace

DecayReport decay_sweep(double L0, const std::vector<double>& offsets, double T,
                        const SweepConfig& cfg) {
    auto cl = classify_length(L0);
    if (!cl) throw std::invalid_argument("decay_sweep: L0 is not critical");
    DecayReport rep;
    rep.L0 = L0;
    rep.per_offset.resize(offsets.size());

    for (std::size_t i = 0; i < offsets.size(); ++i) {
        OffsetResult& r = rep.per_offset[i];
        r.offset = offsets[i];
        r.L = L0 + offsets[i];
        try {
            if (offsets[i] == 0.0) throw std::invalid_argument("offset 0 is the critical length");
            const SpectrumB sp = full_spectrum(r.L, cfg.jmax);
            const QuasiInvariantBasis qb = quasi_invariant_basis(r.L, *cl, sp);
            double slowest = -1e300;
            double dflo = 0.0;
            for (const auto& fm : qb.basis_A) {
                if (fm.zeta.real() > slowest) {
                    slowest = fm.zeta.real();
                    dflo = std::abs(fm.dF_at_0);
                }
            }
            r.re_zeta = slowest;
            r.dF0_abs = dflo;
            r.rate_M_eig = -2.0 * slowest;

            const GridFunction ym = m_direction_datum(r.L, cfg.n, qb);
            const GridFunction yh = h_direction_datum(r.L, cfg.n, qb, sp);
            r.obs_ratio_M = observability_ratio(r.L, cfg.T_obs, ym, cfg.n, cfg.dt);
            r.obs_ratio_H = observability_ratio(r.L, cfg.T_obs, yh, cfg.n, cfg.dt);

            const double tfit_m =
                std::min(cfg.fit_logdrop / std::max(r.rate_M_eig, 1e-12), cfg.max_fit_time);
            const double tfit_h = 6.0;
            if (cfg.nonlinear) {
                GridFunction ym_a = ym, yh_a = yh;
                for (auto& v : ym_a.v) v *= cfg.amplitude;
                for (auto& v : yh_a.v) v *= cfg.amplitude;
                SimOptions so;
                so.store_every = 200;
                const double dtm = tfit_m > 50.0 ? 5e-3 : cfg.dt;
                const Trajectory tm = simulate_nonlinear(ym_a, tfit_m, cfg.n, dtm, so);
                r.rate_M_sim = fit_energy_rate(tm, 0.2 * tfit_m, tfit_m);
                const Trajectory th = simulate_nonlinear(yh_a, tfit_h, cfg.n, cfg.dt, so);
                r.rate_H_sim = fit_energy_rate(th, 0.2 * tfit_h, tfit_h);
                // reduced modal dynamics defect on the stored states
                const EigenmodeA& fm = qb.basis_A.front();
                std::vector<cplx> p(tm.states.size());
                for (std::size_t s = 0; s < tm.states.size(); ++s) {
                    std::vector<cplx> u(tm.states[s].v.size());
                    for (std::size_t q = 0; q < u.size(); ++q) u[q] = tm.states[s].v[q];
                    p[s] = duality_pairing_grid(u, r.L, fm);
                }
                double res = 0.0;
                for (std::size_t s = 1; s + 1 < p.size(); ++s) {
                    const double dtp = tm.state_times[s + 1] - tm.state_times[s];
                    const cplx dp = (p[s + 1] - p[s - 1]) / (2.0 * dtp);
                    res = std::max(res, std::abs(dp - std::conj(fm.zeta) * p[s]));
                }
                r.p_residual = res;
            } else if (tfit_m <= cfg.max_fit_time) {
                const Trajectory tm = simulate_adjoint(ym, tfit_m, cfg.n,
                                                       tfit_m > 50.0 ? 5e-3 : cfg.dt);
                r.rate_M_sim = fit_energy_rate(tm, 0.2 * tfit_m, tfit_m);
                const Trajectory th = simulate_adjoint(yh, tfit_h, cfg.n, cfg.dt);
                r.rate_H_sim = fit_energy_rate(th, 0.2 * tfit_h, tfit_h);
            }
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
    }

    // exponent fits over the successful offsets
    std::vector<double> ds, zs, dfs, obs, rms, rhs2;
    for (const auto& r : rep.per_offset) {
        if (!r.ok) continue;
        ds.push_back(std::abs(r.offset));
        zs.push_back(std::abs(r.re_zeta));
        dfs.push_back(r.dF0_abs);
        if (std::isfinite(r.obs_ratio_M)) obs.push_back(r.obs_ratio_M);
        if (r.rate_M_sim > 0.0) rms.push_back(r.rate_M_sim);
        if (r.rate_H_sim > 0.0) rhs2.push_back(r.rate_H_sim);
    }
    if (ds.size() >= 2) {
        rep.slope_rezeta = loglog_slope(ds, zs);
        rep.slope_dF0 = loglog_slope(ds, dfs);
        if (obs.size() == ds.size()) rep.slope_obs_M = loglog_slope(ds, obs);
        if (rms.size() == ds.size()) rep.slope_rate_M_sim = loglog_slope(ds, rms);
    }
    if (!rhs2.empty()) {
        const auto [mn, mx] = std::minmax_element(rhs2.begin(), rhs2.end());
        rep.rate_H_variation = *mx / *mn - 1.0;
    }
    std::vector<double> obsh;
    for (const auto& r : rep.per_offset)
        if (r.ok && std::isfinite(r.obs_ratio_H)) obsh.push_back(r.obs_ratio_H);
    if (!obsh.empty()) {
        const auto [mn, mx] = std::minmax_element(obsh.begin(), obsh.end());
        rep.obs_H_variation = *mx / *mn - 1.0;
    }
    return rep;
}

}  // namespace kdv
