#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace kdv {

using cplx = std::complex<double>;

// Integer pairs (k,l), k >= l >= 1, with k^2 + k*l + l^2 = n. The residue of
// k - l mod 3 decides whether a second eigenfunction exists at the critical
// length, so pairs carry one of three kinds.
enum class PairKind { S1, S2, S3 };

struct CriticalPair {
    long long k = 0, l = 0;
    PairKind kind = PairKind::S3;
};

enum class LengthClass { N1, N2, N3 };

struct CriticalLength {
    double L0 = 0.0;
    long long index_IC = 0;  // 3 (L0 / 2pi)^2
    std::vector<CriticalPair> pairs;
    LengthClass cls = LengthClass::N1;
    int N0 = 0;  // dimension of the unreachable subspace
    std::vector<double> critical_eigenvalues;  // lambda_c per pair (>= 0; sign partners implied)
};

// All solutions of k^2 + k*l + l^2 = n with k >= l >= 1 (integer arithmetic).
std::vector<CriticalPair> solve_pairs(long long n);

// Classification of a length. Returns nullopt when 3(L/2pi)^2 does not snap
// to an integer within the relative tolerance, or no pair solves the
// Diophantine equation.
std::optional<CriticalLength> classify_length(double L0, double tol = 1e-9);

// Length 2*pi*sqrt((k^2+kl+l^2)/3) generated by a pair.
double critical_length_of(const CriticalPair& p);

// lambda_c = (2k+l)(k-l)(2l+k) / (3 sqrt(3) (k^2+kl+l^2)^{3/2}).
double lambda_c(const CriticalPair& p);

// Type 1 eigenfunction: unit L2 norm, vanishing boundary values and
// derivatives; `order` selects d^order/dx^order, 0 <= order <= 3.
cplx type1_eigenfunction(const CriticalPair& p, double L0, double x, int order = 0);

struct Type2Eval {
    cplx g_tilde;   // the oscillatory Type 2 representative
    cplx g_ortho;   // Gram-Schmidt combination orthogonal to the Type 1 function
};

// Type 2 eigenfunction (exists only for kinds S1, S2; throws on S3).
Type2Eval type2_eigenfunction(const CriticalPair& p, double L0, double x, int order = 0);

// Boundary derivative G~'(0) = G~'(L0) = i sqrt(2) pi (k+l) / L0^{3/2}.
cplx type2_boundary_derivative(const CriticalPair& p, double L0);

std::string to_string(PairKind k);
std::string to_string(LengthClass c);

}  // namespace kdv
