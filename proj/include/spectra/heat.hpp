#pragma once

#include "spectra/eigsolve.hpp"
#include "spectra/grid_function.hpp"
#include "spectra/operator.hpp"

#include <cstdint>

namespace spectra {

struct KrylovOptions {
    double tol = 1e-10;          // target bound on ||exp(-tA)v - result||
    std::int64_t max_subspace = 240;
    int max_halvings = 40;       // time-step halvings before giving up
};

struct HeatResult {
    Eigen::VectorXd value;
    double error_bound = 0.0; // a posteriori estimate accumulated over steps
};

/// exp(-tA) v through a Lanczos subspace (plain three-term recurrence; the
/// exponential does not need reorthogonalization) with the standard
/// a posteriori residual estimate. Splits the time interval when the
/// subspace cap is hit.
HeatResult krylov_expv(const SymmetricOperator& a, double t, const Eigen::VectorXd& v,
                       const KrylovOptions& opts = {});

/// exp(-tA) v. Exact eigen-expansion below the dispatch size, Krylov above.
/// t = 0 returns v unchanged.
Eigen::VectorXd heat_apply(const SymmetricOperator& a, double t, const Eigen::VectorXd& v,
                           const KrylovOptions& opts = {});
GridFunction heat_apply(const SymmetricOperator& a, double t, const GridFunction& v,
                        const KrylovOptions& opts = {});
/// Exact expansion through a full decomposition.
Eigen::VectorXd heat_apply(const SpectralData& s, double t, const Eigen::VectorXd& v);

/// Heat kernel as a dense nodal matrix, one Krylov solve per unit column,
/// columns in parallel. Guarded by the dense budget.
Eigen::MatrixXd heat_kernel_matrix(const SymmetricOperator& a, double t,
                                   std::int64_t dense_budget = default_dense_budget,
                                   double column_tol = 1e-11);

struct HeatKernelNorms {
    double c_12 = 0.0;   // L1 -> L2 operator norm
    double c_2inf = 0.0; // L2 -> Linf operator norm; equals c_12 by duality
};

/// Kernel row/column norms in the cell-weighted convention. The duality
/// |c_12 - c_2inf| <= 1e-8 * max(1, c_12) is asserted on the way out.
HeatKernelNorms heat_kernel_norms(const SymmetricOperator& a, double t,
                                  std::int64_t dense_budget = default_dense_budget);

/// max over sampled f (random vectors plus every eigenvector) of
/// ||exp(-tA)f - f||^2 - 2 t h[f]; nonpositive up to roundoff for gamma >= 0.
double semigroup_form_inequality_check(const SymmetricOperator& a, double t,
                                       std::int64_t samples, std::uint64_t seed = 0x5eedULL);

struct SuperPoincareResult {
    double r = 0.0;
    double t = 0.0; // r/4, the certification time
    double c_12 = 0.0;
    double c_2inf = 0.0;
    double beta_certified = 0.0; // 2 * c_12(r/4)^2
    double beta_observed = 0.0;  // max over samples of (||f||_2^2 - r h[f]) / ||f||_1^2
};

/// Certified and observed constants for  ||f||^2 <= r h[f] + beta ||f||_1^2.
/// The certificate comes from the triangle split
///   ||f|| <= ||f - exp(-tH)f|| + ||exp(-tH)f||,
/// the spectral bound (1 - e^{-s})^2 <= 2s, and the L1->L2 kernel norm;
/// with t = r/4 this yields beta(r) = 2 c_12(r/4)^2 (see README).
/// Samples: `samples` seeded random vectors, every node indicator, and every
/// eigenvector (the latter skipped above the dense budget unless a
/// precomputed decomposition is supplied).
SuperPoincareResult super_poincare_beta(const SymmetricOperator& a, double r,
                                        std::int64_t samples, std::uint64_t seed = 0x5eedULL,
                                        const SpectralData* precomputed = nullptr);

} // namespace spectra
