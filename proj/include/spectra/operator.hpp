#pragma once

#include "spectra/grid.hpp"
#include "spectra/grid_function.hpp"
#include "spectra/kernels.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace spectra {

/// Form-bound record for a KLMN sum: minus_form <= q*base_form + cq*norm^2.
struct KlmnBound {
    double q = 0.0;
    double cq = 0.0;
};

/// Sparse (or, for functional-calculus results, dense) real symmetric matrix
/// over the active nodes of a grid. Rows are indexed by position in
/// active_nodes(), which is an ascending list of grid node ids; nodes removed
/// by a +inf potential or an infinite measure mask are simply absent.
///
/// The matrix acts on nodal values. All form quantities carry the cell
/// measure: quadratic_form(u) = cell_measure * u^T A u.
class SymmetricOperator {
public:
    SymmetricOperator() = default;

    /// Build from symmetric triplets (each unordered pair given once;
    /// both triangles are stored internally).
    static SymmetricOperator from_triplets(GridPtr grid, std::vector<std::int64_t> active,
                                           const std::vector<Eigen::Triplet<double>>& upper);
    static SymmetricOperator from_dense(GridPtr grid, std::vector<std::int64_t> active,
                                        Eigen::MatrixXd m);

    std::int64_t dim() const { return dim_; }
    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    double cell_measure() const { return grid_->cell_measure(); }
    const std::vector<std::int64_t>& active_nodes() const { return active_; }
    bool is_dense() const { return dense_; }

    /// Row of the active list for a grid node, or -1 if masked out.
    std::int64_t row_of_node(std::int64_t node) const;

    // y = A x on operator vectors.
    void apply(const double* x, double* y) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    double coeff(std::int64_t i, std::int64_t j) const;
    Eigen::MatrixXd to_dense() const;
    Eigen::SparseMatrix<double> to_eigen_sparse() const;
    const kernels::Csr& csr() const { return csr_; }

    /// Exact structural symmetry check (bitwise equal transposed entries).
    bool is_symmetric() const;
    /// True when every row couples only to adjacent rows (all 1D-derived
    /// operators have this form and get exact bisection eigensolves).
    bool is_tridiagonal() const;
    /// Diagonal and (dim-1) subdiagonal of a tridiagonal operator.
    void tridiagonal(std::vector<double>& diag, std::vector<double>& sub) const;

    std::optional<double> gamma() const { return gamma_; }
    void set_gamma(std::optional<double> g) { gamma_ = g; }
    std::optional<KlmnBound> klmn() const { return klmn_; }
    void set_klmn(std::optional<KlmnBound> b) { klmn_ = b; }

    /// Restriction to a subset of rows (Dirichlet compression onto the
    /// corresponding grid nodes).
    SymmetricOperator restrict_rows(const std::vector<std::int64_t>& rows) const;

    /// A + shift on the diagonal.
    SymmetricOperator shifted(double shift) const;
    /// A + diag(extra), one entry per row.
    SymmetricOperator with_added_diagonal(const std::vector<double>& extra) const;
    /// factor * A.
    SymmetricOperator scaled(double factor) const;

    /// Gather a grid function supported on active nodes into an operator
    /// vector. Throws when u is nonzero on masked nodes.
    Eigen::VectorXd restrict_function(const GridFunction& u) const;
    /// Scatter an operator vector back to a grid function (zero off the mask).
    GridFunction extend_vector(const Eigen::VectorXd& v) const;

private:
    GridPtr grid_;
    std::vector<std::int64_t> active_; // ascending grid node ids
    std::int64_t dim_ = 0;
    bool dense_ = false;
    kernels::Csr csr_;
    Eigen::MatrixXd dmat_;
    std::optional<double> gamma_;
    std::optional<KlmnBound> klmn_;
};

/// h[u] = cell_measure * u^T A u for a grid function supported on the mask.
double quadratic_form(const SymmetricOperator& a, const GridFunction& u);
/// Same, for an operator vector.
double quadratic_form(const SymmetricOperator& a, const Eigen::VectorXd& u);

// Cell-measure weighted inner product and norm on operator vectors.
double weighted_dot(const SymmetricOperator& a, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& v);
double weighted_norm(const SymmetricOperator& a, const Eigen::VectorXd& u);

} // namespace spectra
