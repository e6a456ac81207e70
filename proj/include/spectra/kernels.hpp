#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Data-parallel inner loops, each provided as a serial reference and an
// OpenMP variant. The parallel versions assign whole rows (or columns) to a
// thread, so every output element is accumulated in the same order as the
// serial code and results are bitwise identical for any thread count. The
// serial versions stay as the ground truth for tests and for the benchmark.

namespace spectra::kernels {

/// Compressed sparse row storage for a symmetric matrix (both triangles kept).
struct Csr {
    std::vector<std::int64_t> row_ptr; // size rows()+1
    std::vector<std::int32_t> col;     // size nnz
    std::vector<double> val;           // size nnz

    std::int64_t rows() const { return static_cast<std::int64_t>(row_ptr.size()) - 1; }
    std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }
};

/// Global switch for the OpenMP variants (on by default when compiled with
/// OpenMP). Tests flip it to compare both paths.
void set_parallel(bool enabled);
bool parallel_enabled();

// y = A x
void spmv_serial(const Csr& a, const double* x, double* y);
void spmv_omp(const Csr& a, const double* x, double* y);
void spmv(const Csr& a, const double* x, double* y);

// y = V^T w for column-major V (n x m); one output per column.
void gemv_t_serial(const double* v, std::int64_t n, std::int64_t m, const double* w, double* y);
void gemv_t_omp(const double* v, std::int64_t n, std::int64_t m, const double* w, double* y);
void gemv_t(const double* v, std::int64_t n, std::int64_t m, const double* w, double* y);

// w -= V y for column-major V (n x m); row-parallel accumulation.
void gemv_sub_serial(const double* v, std::int64_t n, std::int64_t m, const double* y, double* w);
void gemv_sub_omp(const double* v, std::int64_t n, std::int64_t m, const double* y, double* w);
void gemv_sub(const double* v, std::int64_t n, std::int64_t m, const double* y, double* w);

// Per-bucket sums of squares: out[bucket[i]] += x[i]^2 (bucket < 0 skipped).
// Parallel over buckets so each bucket is summed in index order.
void bucket_sumsq_serial(std::span<const double> x, std::span<const std::int32_t> bucket,
                         std::span<double> out);
void bucket_sumsq_omp(std::span<const double> x, std::span<const std::int32_t> bucket,
                      std::span<double> out);
void bucket_sumsq(std::span<const double> x, std::span<const std::int32_t> bucket,
                  std::span<double> out);

} // namespace spectra::kernels
