#pragma once

#include "spectra/operator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace spectra {

inline constexpr std::int64_t default_dense_budget = 4000;

/// Eigenvalues in ascending order with eigenvectors orthonormal in the
/// cell-measure weighted inner product. Partial data retains the k lowest
/// pairs; functional calculus requires full data.
struct SpectralData {
    std::shared_ptr<const SymmetricOperator> op;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd vectors; // dim x retained, weighted-orthonormal columns
    bool full = false;
    double residual_bound = 0.0; // max ||A v - lambda v|| over retained pairs

    std::int64_t retained() const { return eigenvalues.size(); }
    const SymmetricOperator& a() const { return *op; }
};

struct LanczosOptions {
    std::int64_t max_subspace = 0; // 0: automatic from k and dim
    std::uint64_t seed = 0x5eedULL;
    int check_interval = 8;
};

/// Full decomposition through a dense solver. Throws budget_error above the
/// dense budget. The reconstruction defect is verified on the way out.
SpectralData dense_eigendecomposition(const SymmetricOperator& a,
                                      std::int64_t dense_budget = default_dense_budget);

/// The k lowest eigenpairs with residuals at most tol. Tridiagonal operators
/// use bisection plus inverse iteration; anything else within the dense
/// budget may fall through to the dense solver when k is most of the
/// spectrum; large problems run Lanczos with full reorthogonalization.
SpectralData lowest_eigenpairs(const SymmetricOperator& a, std::int64_t k, double tol,
                               const LanczosOptions& opts = {});

/// Lanczos with full reorthogonalization, exposed for cross-checks.
SpectralData lanczos_lowest(const SymmetricOperator& a, std::int64_t k, double tol,
                            const LanczosOptions& opts = {});

struct CountResult {
    std::int64_t count = 0;
    bool lower_bound_only = false; // partial data could hide eigenvalues <= lambda
};

/// #{k : eigenvalue_k <= lambda} among the retained eigenvalues.
CountResult counting_function(const SpectralData& s, double lambda);

/// Exact #{eigenvalues <= lambda} of the operator itself, via Sturm counts
/// (tridiagonal), LDL^T inertia (sparse), or the dense solver.
std::int64_t count_below(const SymmetricOperator& a, double lambda);

/// All eigenvalues <= lambda, ascending, complete. Uses bisection for
/// tridiagonal operators and inertia-guided Lanczos otherwise.
std::vector<double> eigenvalues_below(const SymmetricOperator& a, double lambda,
                                      double value_tol = 1e-10);

/// Smallest eigenvalue (optionally with an eigenvector).
double smallest_eigenvalue(const SymmetricOperator& a, Eigen::VectorXd* vec = nullptr,
                           double tol = 1e-10);

/// Largest eigenvalue of the pencil (diag(m), s) with s positive definite:
/// the best constant q in  sum m_i u_i^2 <= q * u^T S u.
/// Throws std::invalid_argument when s is not positive definite.
double pencil_max_eigenvalue(const std::vector<double>& mdiag, const SymmetricOperator& s,
                             Eigen::VectorXd* vec = nullptr, double tol = 1e-11,
                             std::int64_t dense_budget = default_dense_budget);

/// Gershgorin interval containing the spectrum.
std::pair<double, double> gershgorin_bounds(const SymmetricOperator& a);

// Tridiagonal engine (exposed for tests).
namespace tridiag {
/// #{eigenvalues < sigma} via the Sturm sequence of the shifted LDL^T.
std::int64_t count_below(const std::vector<double>& diag, const std::vector<double>& sub,
                         double sigma);
/// k-th (0-based) eigenvalue by bisection.
double eigenvalue_k(const std::vector<double>& diag, const std::vector<double>& sub,
                    std::int64_t k, double tol = 1e-13);
/// All eigenvalues <= lambda, ascending.
std::vector<double> eigenvalues_below(const std::vector<double>& diag,
                                      const std::vector<double>& sub, double lambda,
                                      double tol = 1e-13);
} // namespace tridiag

} // namespace spectra
