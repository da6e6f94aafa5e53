#pragma once

#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "kdv/biortho.hpp"
#include "kdv/modulated.hpp"
#include "kdv/simulator.hpp"
#include "kdv/spectrum_a.hpp"
#include "kdv/spectrum_b.hpp"

namespace kdv {

struct ProjectionResult {
    SpectralState state;
    double parseval_defect = 0.0;  // ||f||^2 - sum |z_j|^2
};

// Quadrature projection onto the orthonormal B-basis. Rejects a grid with
// fewer than 8 points per shortest resolved wavelength.
ProjectionResult project(const GridFunction& f, const SpectrumB& sp, int K);

// Boundary control of the intermediate system, sampled on the family's time
// grid shifted to [0, T].
struct VControl {
    double T = 0.0;
    std::vector<cplx> v;  // same sample count as the family time grid
};

// Moment-method synthesis: v(t) = sum_k c_k phi_k(t - T/2) with
// c_k = (z_k^0 e^{i la T/2} - z_k^T e^{-i la T/2}) / (i h_k la_k); compensated
// pairs share one coefficient per theta function, chosen by least squares
// over the pair's moment equations. Throws on an uncontrollable direction
// (vanishing E'_k(L) against nonzero data).
VControl synthesize_v(const SpectralState& z0, const SpectralState& zT,
                      const BiorthogonalFamily& fam, const SpectrumB& sp);

// r_j = z_j^0 e^{i la T} - z_j^T - i la_j h_j e^{i la T} int_0^T e^{-i s la} v ds.
std::map<int, cplx> moment_residuals(const VControl& v, const SpectrumB& sp,
                                     const SpectralState& z0, const SpectralState& zT,
                                     int K_check);

enum class TransitionVariant { Basic2, Refined };

struct TransitionCoeffs {
    std::vector<double> c;
    std::vector<double> mus;
    double cond = 0.0;      // condition estimate of the linear system
    double residual = 0.0;  // post-hoc boundary/projection residual of z0
};

// Transition T_c: coefficients with y_half - sum c_j h_{mu_j} in D(B^2)
// (Basic2: the 2x2 mu-system) intersected with H_B (Refined: N0+2 system with
// the atom-projection rows). The spectrum supplies boundary data spectrally;
// pass nullptr to fall back to one-sided differences on the grid.
TransitionCoeffs transition_Tc(const GridFunction& y_half, TransitionVariant var,
                               const std::vector<double>& mus, double L,
                               const QuasiInvariantBasis* basis, const SpectrumB* sp);

// Transition T_rho: final-target coefficients on the good directions E_m so
// that z^T + sum c_j e^{-mu_j T/2} h_{mu_j} lies in H_A.
std::vector<cplx> transition_Trho(const TransitionCoeffs& tc,
                                  const QuasiInvariantBasis& basis, const SpectrumB& sp,
                                  double T);

// Spectral state on the good directions with the given rho coefficients.
SpectralState good_direction_state(const std::vector<cplx>& rho,
                                   const QuasiInvariantBasis& basis, double L, int K);

// u(t) = 0 for t < half_shift, else dxz_trace(t) + sum_j c_j
// e^{-mu_j (t - half_shift)} h'_mu_j(L). The trace vector is aligned with
// `times`; entries before half_shift are ignored.
std::vector<double> assemble_u(const std::vector<double>& times,
                               const std::vector<double>& dxz_trace,
                               const TransitionCoeffs& tc,
                               const std::vector<ModulatedFunction>& hs, double half_shift);

struct ControlInterval {
    double t0 = 0.0, t1 = 0.0;
    double mu1 = 0.0;
    std::vector<double> u;          // samples on the interval's time grid
    double energy_ratio = 0.0;      // ||y(t1)|| / ||y(t0)||
    double moment_residual = 0.0;   // max over checked indices
    double hA_defect = 0.0;         // duality defect of y(t1) (refined runs)
};

struct ControlPlan {
    double T = 0.0;
    double Q = 0.0;
    double n0_exponent = 0.0;  // T = 2^{-n0}
    std::vector<ControlInterval> intervals;
};

// Dyadic schedule: T_n = T (1 - 2^{-n}), mu_{1,n} = Q 2^{(3/2)(n0+n)},
// mu_2 = 2 mu_1.
ControlPlan iteration_schedule(double T, double Q, int n_max);

struct StabilizationParams {
    double Q = 4.0;
    int n_max = 3;
    int K_trunc = 8;
    int K_check = 6;
    int grid_n = 2048;
    double dt = 5e-4;
    int jmax = 24;
    TransitionVariant variant = TransitionVariant::Basic2;
    FamilyOptions family;
};

struct StabilizationResult {
    ControlPlan plan;
    GridFunction y_final;
    double total_ratio = 0.0;  // ||y(T_n_max)|| / ||y0||
};

// Full transition-stabilization iteration: per interval free flow on the
// first half, T_c transition, moment synthesis on the second half, T_rho
// target (Refined), u assembly, and an FD verification run.
StabilizationResult run_transition_stabilization(const GridFunction& y0, double T,
                                                 const StabilizationParams& params, double L,
                                                 std::optional<double> L0 = std::nullopt);

}  // namespace kdv
