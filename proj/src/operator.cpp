#include "spectra/operator.hpp"

#include "spectra/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace spectra {

SymmetricOperator SymmetricOperator::from_triplets(
    GridPtr grid, std::vector<std::int64_t> active,
    const std::vector<Eigen::Triplet<double>>& upper) {
    SymmetricOperator op;
    op.grid_ = std::move(grid);
    std::sort(active.begin(), active.end());
    op.active_ = std::move(active);
    op.dim_ = static_cast<std::int64_t>(op.active_.size());

    // Collect both triangles, then sort into CSR.
    std::vector<std::map<std::int32_t, double>> rows(static_cast<std::size_t>(op.dim_));
    for (const auto& t : upper) {
        const auto i = static_cast<std::int64_t>(t.row());
        const auto j = static_cast<std::int64_t>(t.col());
        if (i < 0 || i >= op.dim_ || j < 0 || j >= op.dim_)
            throw config_error("triplet index out of range");
        rows[i][static_cast<std::int32_t>(j)] += t.value();
        if (i != j) rows[j][static_cast<std::int32_t>(i)] += t.value();
    }
    op.csr_.row_ptr.assign(1, 0);
    for (std::int64_t i = 0; i < op.dim_; ++i) {
        for (const auto& [j, v] : rows[i]) {
            op.csr_.col.push_back(j);
            op.csr_.val.push_back(v);
        }
        op.csr_.row_ptr.push_back(static_cast<std::int64_t>(op.csr_.col.size()));
    }
    return op;
}

SymmetricOperator SymmetricOperator::from_dense(GridPtr grid, std::vector<std::int64_t> active,
                                                Eigen::MatrixXd m) {
    SymmetricOperator op;
    op.grid_ = std::move(grid);
    std::sort(active.begin(), active.end());
    op.active_ = std::move(active);
    op.dim_ = static_cast<std::int64_t>(op.active_.size());
    if (m.rows() != op.dim_ || m.cols() != op.dim_)
        throw config_error("dense matrix size does not match the active set");
    op.dense_ = true;
    op.dmat_ = std::move(m);
    return op;
}

std::int64_t SymmetricOperator::row_of_node(std::int64_t node) const {
    auto it = std::lower_bound(active_.begin(), active_.end(), node);
    if (it == active_.end() || *it != node) return -1;
    return it - active_.begin();
}

void SymmetricOperator::apply(const double* x, double* y) const {
    if (dense_) {
        Eigen::Map<const Eigen::VectorXd> xv(x, dim_);
        Eigen::Map<Eigen::VectorXd> yv(y, dim_);
        yv.noalias() = dmat_ * xv;
        return;
    }
    kernels::spmv(csr_, x, y);
}

Eigen::VectorXd SymmetricOperator::apply(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw std::invalid_argument("operator/vector dimension mismatch");
    Eigen::VectorXd y(dim_);
    apply(x.data(), y.data());
    return y;
}

double SymmetricOperator::coeff(std::int64_t i, std::int64_t j) const {
    if (dense_) return dmat_(i, j);
    for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p)
        if (csr_.col[p] == j) return csr_.val[p];
    return 0.0;
}

Eigen::MatrixXd SymmetricOperator::to_dense() const {
    if (dense_) return dmat_;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    for (std::int64_t i = 0; i < dim_; ++i)
        for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p)
            m(i, csr_.col[p]) = csr_.val[p];
    return m;
}

Eigen::SparseMatrix<double> SymmetricOperator::to_eigen_sparse() const {
    Eigen::SparseMatrix<double> m(dim_, dim_);
    std::vector<Eigen::Triplet<double>> trips;
    if (dense_) {
        for (std::int64_t j = 0; j < dim_; ++j)
            for (std::int64_t i = 0; i < dim_; ++i)
                if (dmat_(i, j) != 0.0)
                    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), dmat_(i, j));
    } else {
        trips.reserve(csr_.val.size());
        for (std::int64_t i = 0; i < dim_; ++i)
            for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p)
                trips.emplace_back(static_cast<int>(i), static_cast<int>(csr_.col[p]),
                                   csr_.val[p]);
    }
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

bool SymmetricOperator::is_symmetric() const {
    if (dense_) {
        for (std::int64_t i = 0; i < dim_; ++i)
            for (std::int64_t j = i + 1; j < dim_; ++j)
                if (dmat_(i, j) != dmat_(j, i)) return false;
        return true;
    }
    for (std::int64_t i = 0; i < dim_; ++i)
        for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p)
            if (csr_.val[p] != coeff(csr_.col[p], i)) return false;
    return true;
}

bool SymmetricOperator::is_tridiagonal() const {
    if (dense_) return false;
    for (std::int64_t i = 0; i < dim_; ++i)
        for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p)
            if (std::abs(csr_.col[p] - i) > 1) return false;
    return true;
}

void SymmetricOperator::tridiagonal(std::vector<double>& diag, std::vector<double>& sub) const {
    diag.assign(static_cast<std::size_t>(dim_), 0.0);
    sub.assign(dim_ > 0 ? static_cast<std::size_t>(dim_ - 1) : 0, 0.0);
    for (std::int64_t i = 0; i < dim_; ++i) {
        for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p) {
            const std::int64_t j = csr_.col[p];
            if (j == i)
                diag[i] = csr_.val[p];
            else if (j == i + 1)
                sub[i] = csr_.val[p];
            else if (j != i - 1)
                throw std::logic_error("operator is not tridiagonal");
        }
    }
}

SymmetricOperator SymmetricOperator::restrict_rows(const std::vector<std::int64_t>& rows) const {
    std::vector<std::int64_t> sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::int64_t> newrow(static_cast<std::size_t>(dim_), -1);
    std::vector<std::int64_t> active;
    active.reserve(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const std::int64_t r = sorted[k];
        if (r < 0 || r >= dim_) throw std::invalid_argument("row restriction out of range");
        newrow[r] = static_cast<std::int64_t>(k);
        active.push_back(active_[r]);
    }
    SymmetricOperator op;
    op.grid_ = grid_;
    op.active_ = std::move(active);
    op.dim_ = static_cast<std::int64_t>(sorted.size());
    if (dense_) {
        op.dense_ = true;
        op.dmat_.resize(op.dim_, op.dim_);
        for (std::int64_t i = 0; i < op.dim_; ++i)
            for (std::int64_t j = 0; j < op.dim_; ++j) op.dmat_(i, j) = dmat_(sorted[i], sorted[j]);
    } else {
        op.csr_.row_ptr.assign(1, 0);
        for (std::int64_t i : sorted) {
            for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p) {
                const std::int64_t jn = newrow[csr_.col[p]];
                if (jn >= 0) {
                    op.csr_.col.push_back(static_cast<std::int32_t>(jn));
                    op.csr_.val.push_back(csr_.val[p]);
                }
            }
            op.csr_.row_ptr.push_back(static_cast<std::int64_t>(op.csr_.col.size()));
        }
    }
    op.gamma_ = gamma_; // Rayleigh quotients only grow under compression
    return op;
}

SymmetricOperator SymmetricOperator::shifted(double shift) const {
    return with_added_diagonal(std::vector<double>(static_cast<std::size_t>(dim_), shift));
}

SymmetricOperator SymmetricOperator::with_added_diagonal(const std::vector<double>& extra) const {
    if (static_cast<std::int64_t>(extra.size()) != dim_)
        throw std::invalid_argument("diagonal size does not match the operator");
    SymmetricOperator op = *this;
    op.klmn_ = std::nullopt;
    op.gamma_ = std::nullopt;
    if (dense_) {
        for (std::int64_t i = 0; i < dim_; ++i) op.dmat_(i, i) += extra[i];
    } else {
        std::vector<bool> present(static_cast<std::size_t>(dim_), false);
        for (std::int64_t i = 0; i < dim_; ++i)
            for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p)
                if (csr_.col[p] == i) {
                    op.csr_.val[p] += extra[i];
                    present[i] = true;
                }
        bool all = true;
        for (std::int64_t i = 0; i < dim_; ++i) all = all && present[i];
        if (!all) {
            // Rebuild with explicit diagonal entries.
            std::vector<Eigen::Triplet<double>> trips;
            for (std::int64_t i = 0; i < dim_; ++i) {
                bool have = false;
                for (std::int64_t p = csr_.row_ptr[i]; p < csr_.row_ptr[i + 1]; ++p) {
                    const std::int64_t j = csr_.col[p];
                    if (j > i) trips.emplace_back(i, j, csr_.val[p]);
                    if (j == i) {
                        trips.emplace_back(i, i, csr_.val[p] + extra[i]);
                        have = true;
                    }
                }
                if (!have) trips.emplace_back(i, i, extra[i]);
            }
            op = from_triplets(grid_, active_, trips);
        }
    }
    // A uniform shift moves the known form bound along.
    bool uniform = true;
    for (double v : extra) uniform = uniform && (v == extra[0]);
    if (gamma_ && uniform && dim_ > 0) op.gamma_ = *gamma_ + extra[0];
    return op;
}

SymmetricOperator SymmetricOperator::scaled(double factor) const {
    SymmetricOperator op = *this;
    if (dense_) {
        op.dmat_ *= factor;
    } else {
        for (auto& v : op.csr_.val) v *= factor;
    }
    op.klmn_ = std::nullopt;
    op.gamma_ = (gamma_ && factor >= 0.0) ? std::optional<double>(*gamma_ * factor)
                                          : std::nullopt;
    return op;
}

Eigen::VectorXd SymmetricOperator::restrict_function(const GridFunction& u) const {
    if (!u.grid_ptr() || !grid_->same_layout(u.grid()))
        throw std::invalid_argument("grid function lives on a different grid");
    Eigen::VectorXd v(dim_);
    for (std::int64_t r = 0; r < dim_; ++r) v[r] = u[active_[r]];
    if (dim_ < grid_->total_nodes()) {
        std::size_t k = 0;
        for (std::int64_t node = 0; node < grid_->total_nodes(); ++node) {
            if (k < active_.size() && active_[k] == node) {
                ++k;
                continue;
            }
            if (u[node] != 0.0)
                throw std::invalid_argument("function has support on masked nodes");
        }
    }
    return v;
}

GridFunction SymmetricOperator::extend_vector(const Eigen::VectorXd& v) const {
    if (v.size() != dim_) throw std::invalid_argument("operator/vector dimension mismatch");
    GridFunction out(grid_);
    for (std::int64_t r = 0; r < dim_; ++r) out[active_[r]] = v[r];
    return out;
}

double quadratic_form(const SymmetricOperator& a, const GridFunction& u) {
    return quadratic_form(a, a.restrict_function(u));
}

double quadratic_form(const SymmetricOperator& a, const Eigen::VectorXd& u) {
    if (u.size() != a.dim()) throw std::invalid_argument("operator/vector dimension mismatch");
    Eigen::VectorXd au = a.apply(u);
    return a.cell_measure() * u.dot(au);
}

double weighted_dot(const SymmetricOperator& a, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& v) {
    return a.cell_measure() * u.dot(v);
}

double weighted_norm(const SymmetricOperator& a, const Eigen::VectorXd& u) {
    return std::sqrt(a.cell_measure()) * u.norm();
}

} // namespace spectra
