#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "kdv/critical_lengths.hpp"
#include "kdv/spectrum_b.hpp"

namespace kdv {

// Bi-orthogonal family to {e^{-i lambda_j s}} on [-T/2, T/2], built by
// Fourier inversion of psi_j(z) = Psi_j(z - lambda_j) Sigma_beta(lambda_j - z),
// with compensated variants for the near-degenerate spectral pairs.

struct FamilyOptions {
    double delta = 0.1;          // support-margin knob (paper: as close to 0 as needed)
    int time_samples = 4096;     // samples on [-T/2, T/2] (made odd internally)
    double grid_oversample = 64; // frequency step = (2 pi / T) / oversample
    double tail_tol = 1e-6;      // admissible truncated-tail mass fraction
    double window_init = 80.0;   // initial frequency half-window
    double window_max = 3000.0;  // give up beyond this half-window
};

struct CompensationInfo {
    PairKind kind = PairKind::S3;      // S1 or S2 mechanisms only
    std::array<int, 2> indices{0, 0};  // compensated spectral indices
    cplx C1{}, C2{};
    double aL = 1.0;                   // S2 pairing value at the partner eigenvalue
};

struct FamilyFn {
    // key > 0 or key < 0: the plain phi_j. Compensated functions use the
    // mechanism id instead: kind distinguishes them.
    enum class Kind { Plain, ThetaS1, ThetaS2Pos, ThetaS2Neg };
    Kind kind = Kind::Plain;
    int key = 0;  // spectral index (Plain) or compensated pair's positive base index
    std::vector<cplx> samples;
};

struct BiorthogonalFamily {
    double T = 0.0, beta = 0.0, nu = 0.0, delta = 0.0, L = 0.0;
    int K_trunc = 0;
    double X_halfwidth = 0.0;           // frequency window actually used
    std::map<int, double> lambda;       // spectral index -> eigenvalue
    std::vector<double> tgrid;          // odd count, uniform on [-T/2, T/2]
    std::vector<FamilyFn> fns;
    std::vector<CompensationInfo> comps;
    std::set<int> compensated;          // indices covered by theta mechanisms
    double reported_tol = 0.0;          // measured bi-orthogonality defect

    const FamilyFn& plain(int j) const;
    const FamilyFn* theta_for(int j) const;  // mechanism covering index j, if any
};

// Smoothed-bump transform Sigma_beta(z); adaptive quadrature, |.| <= 1 on R,
// Sigma_beta(0) = 1.
cplx Sigma_beta(cplx z, double beta, double nu);

// Truncated infinite product Psi_j(z) over |k| <= K_trunc, k != j.
cplx Psi_trunc(int j, cplx z, const std::map<int, double>& lambda, int K_trunc);

// Builds the family. `compensate` carries the nearest critical length when
// the caller wants the S1/S2 mechanisms attached to its pairs.
BiorthogonalFamily build_family(const SpectrumB& sp, double T, int K_trunc,
                                const std::optional<CriticalLength>& compensate = std::nullopt,
                                const FamilyOptions& opt = {});

// int_{-T/2}^{T/2} phi(s) e^{-i lambda_k s} ds by composite Simpson.
cplx pairing(const std::vector<cplx>& phi_samples, double T, double lambda_k);

}  // namespace kdv
