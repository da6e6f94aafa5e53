#pragma once

#include <complex>

// Independent high-precision (256-bit, ~77 decimal digits) evaluations of the
// characteristic functions, built directly from the unrearranged defining
// expressions via MPFR. These are the oracles the double-precision
// implementations are checked against.

namespace oracle {

// 2 sqrt(1-3t^2) cos(2tL) - (sqrt(1-3t^2)+3t) cos((sqrt(1-3t^2)-t)L)
//   + (3t - sqrt(1-3t^2)) cos((sqrt(1-3t^2)+t)L)
double char_elliptic_hp(double t, double L);

// sqrt(3t^2-1) cos(2tL) - 3t sin(tL) sinh(sqrt(3t^2-1) L)
//   - sqrt(3t^2-1) cos(tL) cosh(sqrt(3t^2-1) L)
// evaluated at high precision, returned divided by cosh(sqrt(3t^2-1) L) to
// match the overflow-safe form of the implementation.
double char_hyperbolic_scaled_hp(double t, double L);

// -w e^{3iLtau} + w cos(Lw) + 3i tau sin(Lw), w = sqrt(1-3 tau^2)
std::complex<double> char_A_hp(std::complex<double> tau, double L);

}  // namespace oracle
