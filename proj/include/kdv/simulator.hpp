#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kdv/spectrum_a.hpp"
#include "kdv/spectrum_b.hpp"

namespace kdv {

// Field sampled at x_i = i L / n, i = 0..n.
struct GridFunction {
    double L = 0.0;
    int n = 0;
    std::vector<double> v;  // size n + 1

    static GridFunction zeros(double L, int n);
    static GridFunction sample(double L, int n, const std::function<double(double)>& f);
    double norm2() const;                  // L2 norm (Simpson)
    double dx() const { return L / n; }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> energy;   // E(t) = int y^2
    std::vector<double> dx0;      // d_x y(t, 0)
    std::vector<double> dxL;      // d_x y(t, L)
    std::vector<GridFunction> states;  // thinned per store_every (always has y(T))
    std::vector<double> state_times;
    double energy_identity_defect = 0.0;  // |E(0)-E(T) - 2 int |dx0|^2| (homogeneous runs)
};

// One Crank-Nicolson stepper for y_t + y_xxx + y_x = 0 with y(0)=y(L)=0 and
// y_x(L) = u(t) through a second-order ghost point. The banded system is
// factored once per (L, n, dt).
class LinearStepper {
  public:
    LinearStepper(double L, int n, double dt);
    ~LinearStepper();
    LinearStepper(LinearStepper&&) noexcept;
    // One step from y with boundary data u(t_m) and u(t_{m+1}).
    GridFunction step(const GridFunction& y, double u_now, double u_next) const;
    // Explicit extra RHS hook for the nonlinear term (Adams-Bashforth data).
    GridFunction step_with_forcing(const GridFunction& y, double u_now, double u_next,
                                   const std::vector<double>& forcing) const;
    double dt() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct SimOptions {
    int store_every = 0;  // 0: keep only the final state
};

// Controlled linear run; u_samples must have round(T/dt)+1 entries (dt is
// adjusted to divide T exactly).
Trajectory simulate(const GridFunction& y0, const std::vector<double>& u_samples, double T,
                    int n, double dt, const SimOptions& opt = {});

// Homogeneous adjoint run (u = 0, i.e. y_x(L) = 0).
Trajectory simulate_adjoint(const GridFunction& y0, double T, int n, double dt,
                            const SimOptions& opt = {});

// Nonlinear run y_t + y_xxx + y_x + y y_x = 0 with y(0)=y(L)=y_x(L)=0;
// Crank-Nicolson linear part, Adams-Bashforth y y_x. Throws on blow-up.
Trajectory simulate_nonlinear(const GridFunction& y0, double T, int n, double dt,
                              const SimOptions& opt = {});

// ||y0||^2 / (2 int_0^T |d_x y(t,0)|^2 dt) for the homogeneous run; +inf when
// the trace vanishes (unobservable datum).
double observability_ratio(double L, double T, const GridFunction& y0, int n, double dt);

// Spectral coefficients z_j, j = -K..-1, 1..K, in the B-eigenbasis.
struct SpectralState {
    double L = 0.0;
    int K = 0;
    std::vector<cplx> z;  // layout: z[0..K-1] = j=1..K, z[K..2K-1] = j=-1..-K
    cplx& at(int j);
    const cplx& at(int j) const;
    double norm() const;
    static SpectralState zero(double L, int K);
};

// Modal Duhamel endpoint: z_j(T) = z_j^0 e^{i la T} - i la h_j int e^{i(T-s)la} v ds.
SpectralState modal_duhamel(const SpectralState& z0, const std::vector<cplx>& v_samples,
                            double T, const SpectrumB& sp);

// Full modal trajectory on the v time grid (used for the d_x z(t, L) trace).
std::vector<SpectralState> modal_trajectory(const SpectralState& z0,
                                            const std::vector<cplx>& v_samples, double T,
                                            const SpectrumB& sp);

// ---- decay-rate sweeps ----------------------------------------------------

struct SweepConfig {
    double T_obs = 2.0;   // observability horizon
    int n = 2048;
    double dt = 5e-4;
    int jmax = 12;
    bool nonlinear = false;   // measure rates on the nonlinear flow
    double amplitude = 0.01;  // initial datum size for nonlinear runs
    double fit_logdrop = 0.35;  // log-energy drop targeted by the fit window
    double max_fit_time = 2000.0;
};

struct OffsetResult {
    double offset = 0.0, L = 0.0;
    double re_zeta = 0.0;       // spectral route
    double dF0_abs = 0.0;       // |F'_zeta(0)|
    double rate_M_eig = 0.0;    // -2 Re zeta
    double rate_M_sim = 0.0;    // fitted energy rate, M-direction datum
    double rate_H_sim = 0.0;    // fitted energy rate, H-direction datum
    double obs_ratio_M = 0.0;
    double obs_ratio_H = 0.0;
    double p_residual = 0.0;    // reduced modal dynamics defect (nonlinear runs)
    bool ok = false;
    std::string error;
};

struct DecayReport {
    double L0 = 0.0;
    std::vector<OffsetResult> per_offset;
    double slope_rezeta = 0.0;   // log|Re zeta| vs log delta (expect 2)
    double slope_dF0 = 0.0;      // log|F'(0)| vs log delta (expect 1)
    double slope_obs_M = 0.0;    // observability ratio slope (expect -2)
    double obs_H_variation = 0.0;   // max/min - 1 across offsets
    double slope_rate_M_sim = 0.0;  // exponent of the simulated M rates
    double rate_H_variation = 0.0;
};

DecayReport decay_sweep(double L0, const std::vector<double>& offsets, double T,
                        const SweepConfig& cfg = {});

// Real initial data aligned with the perturbed A-eigenmode (M-direction) and
// a duality-orthogonal H-direction datum; both unit L2 norm.
GridFunction m_direction_datum(double L, int n, const QuasiInvariantBasis& qb);
GridFunction h_direction_datum(double L, int n, const QuasiInvariantBasis& qb,
                               const SpectrumB& sp);

}  // namespace kdv
