#include "spectra/calculus.hpp"

#include "spectra/errors.hpp"

#include <cmath>
#include <string>

namespace spectra {

namespace {

// Dense nodal matrix  cell_measure * V diag(f) V^T  for weighted-orthonormal V.
Eigen::MatrixXd calculus_matrix(const SpectralData& s, const Eigen::VectorXd& fvals) {
    const double w = s.a().cell_measure();
    Eigen::MatrixXd m = s.vectors * fvals.asDiagonal() * s.vectors.transpose();
    m *= w;
    // Symmetrize exactly; addition is commutative so the result is bitwise
    // symmetric.
    Eigen::MatrixXd mt = m.transpose();
    m = 0.5 * (m + mt);
    return m;
}

SymmetricOperator wrap(const SpectralData& s, Eigen::MatrixXd m, double gamma) {
    auto op = SymmetricOperator::from_dense(s.a().grid_ptr(), s.a().active_nodes(), std::move(m));
    op.set_gamma(gamma);
    return op;
}

void require_full(const SpectralData& s, const char* what) {
    if (!s.full)
        throw std::invalid_argument(std::string(what) +
                                    " requires a full spectral decomposition");
}

} // namespace

SymmetricOperator functional_calculus(const SpectralData& s, const ScalarMap& phi) {
    require_full(s, "functional calculus");
    const std::int64_t n = s.retained();
    Eigen::VectorXd fv(n);
    for (std::int64_t i = 0; i < n; ++i) {
        fv[i] = phi(s.eigenvalues[i]);
        if (std::isnan(fv[i]))
            throw std::invalid_argument("phi is undefined at eigenvalue " +
                                        std::to_string(s.eigenvalues[i]));
    }
    return wrap(s, calculus_matrix(s, fv), fv.minCoeff());
}

SymmetricOperator spectral_projector(const SpectralData& s, const Interval& interval) {
    require_full(s, "spectral projector");
    const std::int64_t n = s.retained();
    Eigen::VectorXd fv(n);
    for (std::int64_t i = 0; i < n; ++i) fv[i] = interval.contains(s.eigenvalues[i]) ? 1.0 : 0.0;
    return wrap(s, calculus_matrix(s, fv), 0.0);
}

std::vector<double> projector_boundary_ties(const SpectralData& s, const Interval& interval,
                                            double tie_tol) {
    std::vector<double> ties;
    for (std::int64_t i = 0; i < s.retained(); ++i) {
        const double lam = s.eigenvalues[i];
        if (std::abs(lam - interval.lo) <= tie_tol || std::abs(lam - interval.hi) <= tie_tol)
            ties.push_back(lam);
    }
    return ties;
}

CompositionCheck composition_identity_check(const SpectralData& s, const ScalarMap& g,
                                            const Interval& interval) {
    require_full(s, "composition identity");
    CompositionCheck out;
    for (std::int64_t i = 0; i < s.retained(); ++i) {
        const double gl = g(s.eigenvalues[i]);
        if (std::isnan(gl))
            throw std::invalid_argument("g is undefined at eigenvalue " +
                                        std::to_string(s.eigenvalues[i]));
        if (std::abs(gl - interval.lo) <= 1e-9 || std::abs(gl - interval.hi) <= 1e-9)
            out.ties.push_back(s.eigenvalues[i]);
    }
    // Route one: decompose the matrix g(H) afresh and project it onto I.
    SymmetricOperator gh = functional_calculus(s, g);
    SpectralData sg = dense_eigendecomposition(gh);
    Eigen::MatrixXd p1 = spectral_projector(sg, interval).to_dense();
    // Route two: pull the interval back through g eigenvalue by eigenvalue.
    const std::int64_t n = s.retained();
    Eigen::VectorXd fv(n);
    for (std::int64_t i = 0; i < n; ++i)
        fv[i] = interval.contains(g(s.eigenvalues[i])) ? 1.0 : 0.0;
    Eigen::MatrixXd p2 = calculus_matrix(s, fv);
    out.defect = (p1 - p2).norm();
    return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    // Eigenvalues of the symmetrized product, no general SVD involved.
    Eigen::MatrixXd mtm = m.transpose() * m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mtm, Eigen::EigenvaluesOnly);
    Eigen::VectorXd sv = es.eigenvalues().reverse();
    for (auto& v : sv) v = std::sqrt(std::max(v, 0.0));
    return sv;
}

namespace {

double sv_tail_impl(const Eigen::MatrixXd& bphi, std::int64_t k) {
    if (k >= bphi.rows() || k < 0)
        throw std::invalid_argument("singular value index out of range");
    return singular_values(bphi)[k];
}

} // namespace

double sv_tail(const SymmetricOperator& b, const SpectralData& sa, const ScalarMap& phi,
               std::int64_t k) {
    if (b.dim() != sa.a().dim())
        throw std::invalid_argument("B and A act on different active sets");
    Eigen::MatrixXd prod = b.to_dense() * functional_calculus(sa, phi).to_dense();
    return sv_tail_impl(prod, k);
}

double sv_tail(const std::vector<std::int64_t>& indicator_nodes, const SpectralData& sa,
               const ScalarMap& phi, std::int64_t k) {
    Eigen::MatrixXd prod = functional_calculus(sa, phi).to_dense();
    const auto& op = sa.a();
    std::vector<bool> keep(static_cast<std::size_t>(op.dim()), false);
    for (auto node : indicator_nodes) {
        const std::int64_t r = op.row_of_node(node);
        if (r >= 0) keep[r] = true;
    }
    for (std::int64_t i = 0; i < op.dim(); ++i)
        if (!keep[i]) prod.row(i).setZero();
    return sv_tail_impl(prod, k);
}

double hs_norm(const std::vector<std::int64_t>& e_nodes, const SpectralData& sa, double t) {
    require_full(sa, "heat kernel materialization");
    const auto& op = sa.a();
    Eigen::VectorXd fv(sa.retained());
    for (std::int64_t i = 0; i < sa.retained(); ++i) fv[i] = std::exp(-t * sa.eigenvalues[i]);
    Eigen::MatrixXd kmat = calculus_matrix(sa, fv);
    double acc = 0.0;
    for (auto node : e_nodes) {
        const std::int64_t r = op.row_of_node(node);
        if (r >= 0) acc += kmat.row(r).squaredNorm();
    }
    return std::sqrt(op.cell_measure() * acc);
}

double hs_norm_eigen_route(const std::vector<std::int64_t>& e_nodes, const SpectralData& sa,
                           double t) {
    require_full(sa, "heat kernel eigen expansion");
    const auto& op = sa.a();
    std::vector<std::int64_t> rows;
    for (auto node : e_nodes) {
        const std::int64_t r = op.row_of_node(node);
        if (r >= 0) rows.push_back(r);
    }
    const double w = op.cell_measure();
    double acc = 0.0;
    for (std::int64_t k = 0; k < sa.retained(); ++k) {
        double restr = 0.0;
        for (auto r : rows) restr += sa.vectors(r, k) * sa.vectors(r, k);
        acc += std::exp(-2.0 * t * sa.eigenvalues[k]) * (w * restr);
    }
    return std::sqrt(w * acc);
}

} // namespace spectra
