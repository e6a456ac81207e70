#include "spectra/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spectra::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

void spmv_serial(const Csr& a, const double* x, double* y) {
    const std::int64_t n = a.rows();
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::int64_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
            acc += a.val[p] * x[a.col[p]];
        y[i] = acc;
    }
}

void spmv_omp(const Csr& a, const double* x, double* y) {
    const std::int64_t n = a.rows();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::int64_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
            acc += a.val[p] * x[a.col[p]];
        y[i] = acc;
    }
}

void spmv(const Csr& a, const double* x, double* y) {
    if (parallel_enabled())
        spmv_omp(a, x, y);
    else
        spmv_serial(a, x, y);
}

void gemv_t_serial(const double* v, std::int64_t n, std::int64_t m, const double* w, double* y) {
    for (std::int64_t j = 0; j < m; ++j) {
        const double* colj = v + j * n;
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i) acc += colj[i] * w[i];
        y[j] = acc;
    }
}

void gemv_t_omp(const double* v, std::int64_t n, std::int64_t m, const double* w, double* y) {
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < m; ++j) {
        const double* colj = v + j * n;
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i) acc += colj[i] * w[i];
        y[j] = acc;
    }
}

void gemv_t(const double* v, std::int64_t n, std::int64_t m, const double* w, double* y) {
    if (parallel_enabled())
        gemv_t_omp(v, n, m, w, y);
    else
        gemv_t_serial(v, n, m, w, y);
}

void gemv_sub_serial(const double* v, std::int64_t n, std::int64_t m, const double* y, double* w) {
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < m; ++j) acc += v[j * n + i] * y[j];
        w[i] -= acc;
    }
}

void gemv_sub_omp(const double* v, std::int64_t n, std::int64_t m, const double* y, double* w) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < m; ++j) acc += v[j * n + i] * y[j];
        w[i] -= acc;
    }
}

void gemv_sub(const double* v, std::int64_t n, std::int64_t m, const double* y, double* w) {
    if (parallel_enabled())
        gemv_sub_omp(v, n, m, y, w);
    else
        gemv_sub_serial(v, n, m, y, w);
}

void bucket_sumsq_serial(std::span<const double> x, std::span<const std::int32_t> bucket,
                         std::span<double> out) {
    for (auto& o : out) o = 0.0;
    const std::int64_t nb = static_cast<std::int64_t>(out.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::int32_t b = bucket[i];
        if (b >= 0 && b < nb) out[b] += x[i] * x[i];
    }
}

void bucket_sumsq_omp(std::span<const double> x, std::span<const std::int32_t> bucket,
                      std::span<double> out) {
    const std::int64_t nb = static_cast<std::int64_t>(out.size());
    // Each thread owns a contiguous bucket range and scans the input once, so
    // per-bucket accumulation order matches the serial loop.
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nb; ++b) out[b] = 0.0;
#pragma omp parallel
    {
#ifdef _OPENMP
        const int nt = omp_get_num_threads();
        const int tid = omp_get_thread_num();
#else
        const int nt = 1;
        const int tid = 0;
#endif
        const std::int64_t lo = nb * tid / nt;
        const std::int64_t hi = nb * (tid + 1) / nt;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::int32_t b = bucket[i];
            if (b >= lo && b < hi) out[b] += x[i] * x[i];
        }
    }
}

void bucket_sumsq(std::span<const double> x, std::span<const std::int32_t> bucket,
                  std::span<double> out) {
    if (parallel_enabled())
        bucket_sumsq_omp(x, bucket, out);
    else
        bucket_sumsq_serial(x, bucket, out);
}

} // namespace spectra::kernels
