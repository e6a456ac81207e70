#pragma once

#include "spectra/eigsolve.hpp"
#include "spectra/operator.hpp"

#include <functional>
#include <vector>

namespace spectra {

/// Closed interval [lo, hi]; empty when lo > hi.
struct Interval {
    double lo = 0.0;
    double hi = -1.0;

    bool contains(double t) const { return lo <= t && t <= hi; }
    bool empty() const { return lo > hi; }
    Interval intersect(const Interval& other) const {
        return {std::max(lo, other.lo), std::min(hi, other.hi)};
    }
};

using ScalarMap = std::function<double(double)>;

/// phi(H) from a full decomposition, as a dense symmetric operator acting on
/// nodal values. Throws when the data is partial or phi is undefined (NaN)
/// at some eigenvalue.
SymmetricOperator functional_calculus(const SpectralData& s, const ScalarMap& phi);

/// Orthogonal projector onto the eigenspaces with eigenvalue in the closed
/// interval. Boundary coincidences are not resolved silently: use
/// projector_boundary_ties to inspect them.
SymmetricOperator spectral_projector(const SpectralData& s, const Interval& interval);

/// Eigenvalues within tie_tol of either endpoint of the interval.
std::vector<double> projector_boundary_ties(const SpectralData& s, const Interval& interval,
                                            double tie_tol = 1e-9);

struct CompositionCheck {
    double defect = 0.0;           // Frobenius norm of 1_I(g(H)) - 1_{g^{-1}(I)}(H)
    std::vector<double> ties;      // eigenvalues with g(lambda) within 1e-9 of the boundary
};

/// Two-route identity check: the projector of the matrix g(H) onto I,
/// computed from a fresh decomposition of g(H), against the projector of H
/// onto {lambda : g(lambda) in I}.
CompositionCheck composition_identity_check(const SpectralData& s, const ScalarMap& g,
                                            const Interval& interval);

/// Descending singular values of B * phi(A) in the weighted geometry
/// (adjoints reduce to transposes under the uniform cell weight).
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

/// The (k+1)-st singular value (0-based index k in descending order) of
/// B * phi(A). B is either a node-set indicator over the active rows or a
/// SymmetricOperator on the same active set.
double sv_tail(const SymmetricOperator& b, const SpectralData& sa, const ScalarMap& phi,
               std::int64_t k);
double sv_tail(const std::vector<std::int64_t>& indicator_nodes, const SpectralData& sa,
               const ScalarMap& phi, std::int64_t k);

/// Hilbert-Schmidt size of 1_E e^{-tA} in the cell-weighted convention:
/// hs^2 = cell_measure * sum of squared nodal-matrix entries, so at t = 0 it
/// equals sqrt(volume of E within the active set).
double hs_norm(const std::vector<std::int64_t>& e_nodes, const SpectralData& sa, double t);

/// Independent route for the same quantity through the eigen-expansion
/// sum_k e^{-2 t lambda_k} * cell_measure * ||1_E v_k||_w^2.
double hs_norm_eigen_route(const std::vector<std::int64_t>& e_nodes, const SpectralData& sa,
                           double t);

} // namespace spectra
