#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "kdv/critical_lengths.hpp"

namespace kdv {

// One eigenmode of the skew-adjoint operator B (phi(0)=phi(L)=0,
// phi'(0)=phi'(L)). Negative indices are realized by conjugation of the
// positive partner so that lambda_{-j} = -lambda_j holds exactly.
struct EigenmodeB {
    int index = 0;
    double tau = 0.0;      // reported parameter, tau_{-j} = -tau_j
    double lambda = 0.0;   // 2 tau (4 tau^2 - 1)
    bool elliptic = true;
    bool conjugated = false;  // negative-index mirror of the stored data
    double L = 0.0;
    double tau_eval = 0.0;  // parameter of the stored (positive-index) closed form
    cplx r1{}, r2{}, r3{};  // raw solution coefficients (elliptic basis)
    cplx alpha{};           // normalization + phase factor
    cplx dE_at_L{};         // E'(L) ( = E'(0) )
};

struct SpectrumB {
    double L = 0.0;
    int jmax = 0;
    int N_L = 0;                   // positive elliptic count
    std::vector<EigenmodeB> modes; // index order: 1..jmax then -1..-jmax
    const EigenmodeB& mode(int j) const;
    std::vector<int> elliptic_indices() const;  // Lambda_E
};

struct SpectrumOptions {
    int min_scan_cells = 4096;     // elliptic scan lower bound on cell count
    double bisect_tol = 1e-13;
    int newton_steps = 3;
    double trivial_exclusion = 1e-9;   // radius around +-sqrt(3)/6
    double degeneracy_guard = 1e-12;   // closer roots => effectively critical
    double critical_refine_offset = 0.2;  // |L-L0| below which the scan refines
    int norm_panels = 8192;        // Simpson panels for L2 normalization
};

// Characteristic function of the elliptic regime (3 t^2 < 1). Throws outside.
double char_elliptic(double t, double L);
double char_elliptic_dt(double t, double L);

// Characteristic function of the hyperbolic regime (3 t^2 > 1), evaluated in
// an overflow-safe rearrangement (divided by cosh(sqrt(3t^2-1) L)).
double char_hyperbolic(double t, double L);

// Full spectrum with indices |j| <= jmax. Throws when L is critical within
// tolerance or a bracketing step fails.
SpectrumB full_spectrum(double L, int jmax, const SpectrumOptions& opt = {});

// Evaluate d^order E_j / dx^order at x, 0 <= order <= 3.
cplx eval_eigenfunction(const EigenmodeB& mode, double x, int order = 0);

// E'_j(L) from the differentiated closed form.
cplx boundary_derivative(const EigenmodeB& mode);

// First-order elliptic eigenvalue predictions near a critical length.
// S1/S2 pairs split linearly: returns {lambda_-, lambda_+}.
std::array<double, 2> perturbation_prediction_split(const CriticalPair& p, double L0, double L);
// S3 pairs drift quadratically: returns the single prediction.
double perturbation_prediction_quadratic(const CriticalPair& p, double L0, double L);

struct RotationData {
    double theta = 0.0;
    std::array<std::array<double, 2>, 2> C_rot{};       // trig form
    std::array<std::array<double, 2>, 2> C_explicit{};  // C1+-, C2+- closed forms
};

// Rotation relating the split eigenfunctions to (G, G_ortho); S1/S2 only.
RotationData rotation_matrix(const CriticalPair& p);

// Nearest critical length to L within max_offset, if any.
std::optional<CriticalLength> nearest_critical(double L, double max_offset);

// Positive elliptic indices grouped by critical pair (parallel to cl.pairs;
// S2 pairs own two indices, S1/S3 pairs one). Each index is used once.
std::vector<std::vector<int>> group_elliptic_by_pair(const SpectrumB& sp,
                                                     const CriticalLength& cl);

}  // namespace kdv
