#include "kdv/kernels.hpp"

#include <cmath>

#ifdef KDV_HAVE_OPENMP
#include <omp.h>
#endif

namespace kdv {

namespace {
constexpr std::size_t kResync = 4096;  // phase resync interval
}

namespace par {
bool& force_serial() {
    static bool flag = false;
    return flag;
}
}  // namespace par

void uniform_source_sum_serial(std::span<const cplx> w, double x0, double dx,
                               std::span<const double> t, std::span<cplx> out) {
    const std::size_t nk = w.size();
    for (std::size_t m = 0; m < t.size(); ++m) {
        const double tm = t[m];
        const cplx rot = std::polar(1.0, dx * tm);
        cplx phase = std::polar(1.0, x0 * tm);
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k < nk; ++k) {
            if (k && k % kResync == 0) phase = std::polar(1.0, (x0 + k * dx) * tm);
            acc += w[k] * phase;
            phase *= rot;
        }
        out[m] = acc;
    }
}

void uniform_source_sum_omp(std::span<const cplx> w, double x0, double dx,
                            std::span<const double> t, std::span<cplx> out) {
#ifdef KDV_HAVE_OPENMP
    const std::size_t nk = w.size();
    const auto nm = static_cast<long long>(t.size());
#pragma omp parallel for schedule(static)
    for (long long m = 0; m < nm; ++m) {
        const double tm = t[m];
        const cplx rot = std::polar(1.0, dx * tm);
        cplx phase = std::polar(1.0, x0 * tm);
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k < nk; ++k) {
            if (k && k % kResync == 0) phase = std::polar(1.0, (x0 + k * dx) * tm);
            acc += w[k] * phase;
            phase *= rot;
        }
        out[m] = acc;
    }
#else
    uniform_source_sum_serial(w, x0, dx, t, out);
#endif
}

namespace {

void target_sum_chunk(std::span<const double> v, std::span<const double> xq, double nu, double s0,
                      double ds, std::span<cplx> out, std::size_t m_begin, std::size_t m_end) {
    for (std::size_t m = m_begin; m < m_end; ++m) out[m] = cplx{0.0, 0.0};
    for (std::size_t q = 0; q < v.size(); ++q) {
        const double a = -nu * xq[q];
        const cplx rot = std::polar(1.0, a * ds);
        cplx phase = std::polar(1.0, a * (s0 + m_begin * ds));
        const double vq = v[q];
        for (std::size_t m = m_begin; m < m_end; ++m) {
            if (m > m_begin && (m - m_begin) % kResync == 0)
                phase = std::polar(1.0, a * (s0 + m * ds));
            out[m] += vq * phase;
            phase *= rot;
        }
    }
}

}  // namespace

void uniform_target_sum_serial(std::span<const double> v, std::span<const double> xq, double nu,
                               double s0, double ds, std::span<cplx> out) {
    target_sum_chunk(v, xq, nu, s0, ds, out, 0, out.size());
}

void uniform_target_sum_omp(std::span<const double> v, std::span<const double> xq, double nu,
                            double s0, double ds, std::span<cplx> out) {
#ifdef KDV_HAVE_OPENMP
    const std::size_t n = out.size();
    int nthreads = omp_get_max_threads();
    const std::size_t chunk = std::max<std::size_t>(1024, (n + nthreads - 1) / nthreads);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long c = 0; c < static_cast<long long>((n + chunk - 1) / chunk); ++c) {
        const std::size_t b = c * chunk;
        const std::size_t e = std::min(n, b + chunk);
        target_sum_chunk(v, xq, nu, s0, ds, out, b, e);
    }
#else
    uniform_target_sum_serial(v, xq, nu, s0, ds, out);
#endif
}

void uniform_source_sum(std::span<const cplx> w, double x0, double dx, std::span<const double> t,
                        std::span<cplx> out) {
    if (par::force_serial())
        uniform_source_sum_serial(w, x0, dx, t, out);
    else
        uniform_source_sum_omp(w, x0, dx, t, out);
}

void uniform_target_sum(std::span<const double> v, std::span<const double> xq, double nu,
                        double s0, double ds, std::span<cplx> out) {
    if (par::force_serial())
        uniform_target_sum_serial(v, xq, nu, s0, ds, out);
    else
        uniform_target_sum_omp(v, xq, nu, s0, ds, out);
}

}  // namespace kdv
