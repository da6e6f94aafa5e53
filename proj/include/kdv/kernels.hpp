#pragma once

#include <complex>
#include <span>
#include <vector>

namespace kdv {

using cplx = std::complex<double>;

// The two hot loops of the bi-orthogonal family build. Both come in a plain
// serial form (the reference) and an OpenMP form; tests assert agreement and
// kdv_bench compares their throughput.
//
// uniform_source_sum: out[m] = sum_k w[k] * exp(i*(x0 + k*dx)*t[m])
// uniform_target_sum: out[m] = sum_q v[q] * exp(-i*nu*xq[q]*(s0 + m*ds))
//
// The inner loops advance the phase by a fixed rotation per step, with a
// periodic resync against accumulated round-off.

void uniform_source_sum_serial(std::span<const cplx> w, double x0, double dx,
                               std::span<const double> t, std::span<cplx> out);
void uniform_source_sum_omp(std::span<const cplx> w, double x0, double dx,
                            std::span<const double> t, std::span<cplx> out);

void uniform_target_sum_serial(std::span<const double> v, std::span<const double> xq, double nu,
                               double s0, double ds, std::span<cplx> out);
void uniform_target_sum_omp(std::span<const double> v, std::span<const double> xq, double nu,
                            double s0, double ds, std::span<cplx> out);

// Dispatch helpers honoring the global serial switch in kdv::par.
void uniform_source_sum(std::span<const cplx> w, double x0, double dx, std::span<const double> t,
                        std::span<cplx> out);
void uniform_target_sum(std::span<const double> v, std::span<const double> xq, double nu,
                        double s0, double ds, std::span<cplx> out);

namespace par {
// When true all dispatch helpers take the serial path (used by the tests to
// cross-check and by kdv_bench).
bool& force_serial();
}  // namespace par

}  // namespace kdv
