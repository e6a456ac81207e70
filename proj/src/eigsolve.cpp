#include "spectra/eigsolve.hpp"

#include "spectra/errors.hpp"
#include "spectra/kernels.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace spectra {

namespace {

constexpr double kPivMin = 1e-290;

double spectral_scale(const SymmetricOperator& a) {
    auto [lo, hi] = gershgorin_bounds(a);
    return std::max({1.0, std::abs(lo), std::abs(hi)});
}

// Weighted-orthonormal columns from Euclidean-orthonormal ones.
void to_weighted(Eigen::MatrixXd& v, double cell_measure) {
    v *= 1.0 / std::sqrt(cell_measure);
}

// LU solve of (T - sigma) x = rhs for tridiagonal T, with partial pivoting.
// Row swaps introduce a second superdiagonal d of fill-in.
bool tridiag_solve_shifted(const std::vector<double>& diag, const std::vector<double>& sub,
                           double sigma, Eigen::VectorXd& x) {
    const std::int64_t n = static_cast<std::int64_t>(diag.size());
    if (n == 0) return false;
    if (n == 1) {
        double a0 = diag[0] - sigma;
        if (a0 == 0.0) a0 = kPivMin;
        x[0] /= a0;
        return x.allFinite();
    }
    std::vector<double> a(n), b(n - 1), c(n - 1), d(n > 2 ? n - 2 : 0, 0.0);
    for (std::int64_t i = 0; i < n; ++i) a[i] = diag[i] - sigma;
    for (std::int64_t i = 0; i + 1 < n; ++i) {
        b[i] = sub[i]; // superdiagonal
        c[i] = sub[i]; // subdiagonal
    }
    Eigen::VectorXd r = x;
    for (std::int64_t i = 0; i + 1 < n; ++i) {
        if (std::abs(c[i]) > std::abs(a[i])) {
            std::swap(a[i], c[i]);
            std::swap(b[i], a[i + 1]);
            if (i + 2 < n) std::swap(d[i], b[i + 1]);
            std::swap(r[i], r[i + 1]);
        }
        if (a[i] == 0.0) a[i] = kPivMin;
        const double m = c[i] / a[i];
        a[i + 1] -= m * b[i];
        if (i + 2 < n) b[i + 1] -= m * d[i];
        r[i + 1] -= m * r[i];
    }
    if (a[n - 1] == 0.0) a[n - 1] = kPivMin;
    x[n - 1] = r[n - 1] / a[n - 1];
    x[n - 2] = (r[n - 2] - b[n - 2] * x[n - 1]) / a[n - 2];
    for (std::int64_t i = n - 3; i >= 0; --i)
        x[i] = (r[i] - b[i] * x[i + 1] - d[i] * x[i + 2]) / a[i];
    return x.allFinite();
}

// Inverse iteration for one tridiagonal eigenvector; orthogonalizes against
// previously found vectors of the same cluster.
Eigen::VectorXd tridiag_eigenvector(const std::vector<double>& diag,
                                    const std::vector<double>& sub, double lambda,
                                    const std::vector<Eigen::VectorXd>& prev,
                                    std::uint64_t seed) {
    const std::int64_t n = static_cast<std::int64_t>(diag.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd x(n);
    for (auto& v : x) v = gauss(rng);
    double scale = 1.0;
    for (std::int64_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(diag[i]));
    const double shift = lambda * (1.0 + 1e-14) + 1e-14 * scale;
    for (int it = 0; it < 4; ++it) {
        for (const auto& p : prev) x -= p.dot(x) * p;
        x.normalize();
        if (!tridiag_solve_shifted(diag, sub, shift, x)) break;
        const double nx = x.norm();
        if (!(nx > 0.0) || !x.allFinite()) {
            for (auto& v : x) v = gauss(rng);
            continue;
        }
        x /= nx;
    }
    for (const auto& p : prev) x -= p.dot(x) * p;
    x.normalize();
    return x;
}

} // namespace

std::pair<double, double> gershgorin_bounds(const SymmetricOperator& a) {
    double lo = 0.0, hi = 0.0;
    const std::int64_t n = a.dim();
    if (n == 0) return {0.0, 0.0};
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    if (a.is_dense()) {
        const auto m = a.to_dense();
        for (std::int64_t i = 0; i < n; ++i) {
            double center = m(i, i), radius = 0.0;
            for (std::int64_t j = 0; j < n; ++j)
                if (j != i) radius += std::abs(m(i, j));
            lo = std::min(lo, center - radius);
            hi = std::max(hi, center + radius);
        }
        return {lo, hi};
    }
    const auto& csr = a.csr();
    for (std::int64_t i = 0; i < n; ++i) {
        double center = 0.0, radius = 0.0;
        for (std::int64_t p = csr.row_ptr[i]; p < csr.row_ptr[i + 1]; ++p) {
            if (csr.col[p] == i)
                center = csr.val[p];
            else
                radius += std::abs(csr.val[p]);
        }
        lo = std::min(lo, center - radius);
        hi = std::max(hi, center + radius);
    }
    return {lo, hi};
}

namespace tridiag {

std::int64_t count_below(const std::vector<double>& diag, const std::vector<double>& sub,
                         double sigma) {
    const std::int64_t n = static_cast<std::int64_t>(diag.size());
    std::int64_t cnt = 0;
    double t = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double offsq = (i > 0) ? sub[i - 1] * sub[i - 1] : 0.0;
        t = diag[i] - sigma - (i > 0 ? offsq / t : 0.0);
        if (t == 0.0) t = -kPivMin;
        if (t < 0.0) ++cnt;
    }
    return cnt;
}

double eigenvalue_k(const std::vector<double>& diag, const std::vector<double>& sub,
                    std::int64_t k, double tol) {
    const std::int64_t n = static_cast<std::int64_t>(diag.size());
    if (k < 0 || k >= n) throw std::invalid_argument("eigenvalue index out of range");
    double lo = diag[0], hi = diag[0];
    for (std::int64_t i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::abs(sub[i - 1]) : 0.0) + (i + 1 < n ? std::abs(sub[i]) : 0.0);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    const double span = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    while (hi - lo > tol * span) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // machine resolution reached
        if (count_below(diag, sub, mid) <= k)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> eigenvalues_below(const std::vector<double>& diag,
                                      const std::vector<double>& sub, double lambda,
                                      double tol) {
    const double tie = 1e-9 * std::max(1.0, std::abs(lambda));
    const std::int64_t m = count_below(diag, sub, lambda + tie);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m));
    for (std::int64_t k = 0; k < m; ++k) out.push_back(eigenvalue_k(diag, sub, k, tol));
    return out;
}

} // namespace tridiag

SpectralData dense_eigendecomposition(const SymmetricOperator& a, std::int64_t dense_budget) {
    const std::int64_t n = a.dim();
    if (n > dense_budget)
        throw budget_error("dense eigendecomposition of dimension " + std::to_string(n) +
                           " exceeds the budget " + std::to_string(dense_budget));
    Eigen::MatrixXd m = a.to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw convergence_error("dense symmetric eigensolver failed");

    SpectralData s;
    s.op = std::make_shared<SymmetricOperator>(a);
    s.eigenvalues = es.eigenvalues();
    s.vectors = es.eigenvectors();
    s.full = true;

    const double anorm = std::max(m.norm(), 1e-300);
    if (n <= 1200) {
        const double recon =
            (m - s.vectors * s.eigenvalues.asDiagonal() * s.vectors.transpose()).norm();
        if (recon > 1e-10 * anorm)
            throw convergence_error("eigendecomposition reconstruction defect " +
                                    std::to_string(recon / anorm));
    }
    // Residuals on a spread of pairs (Euclidean residual of a unit vector
    // equals the weighted residual of the weighted-unit vector).
    double rmax = 0.0;
    const std::int64_t nsample = std::min<std::int64_t>(n, 8);
    for (std::int64_t t = 0; t < nsample; ++t) {
        const std::int64_t k = (n - 1) * t / std::max<std::int64_t>(1, nsample - 1);
        rmax = std::max(rmax,
                        (m * s.vectors.col(k) - s.eigenvalues[k] * s.vectors.col(k)).norm());
    }
    s.residual_bound = std::max(rmax, 1e-14 * anorm);
    to_weighted(s.vectors, a.cell_measure());
    return s;
}

SpectralData lanczos_lowest(const SymmetricOperator& a, std::int64_t k, double tol,
                            const LanczosOptions& opts) {
    const std::int64_t n = a.dim();
    if (k < 1 || k > n) throw std::invalid_argument("requested eigenpair count out of range");
    const std::int64_t m_max =
        opts.max_subspace > 0 ? std::min(opts.max_subspace, n)
                              : std::min(n, std::max<std::int64_t>(8 * k + 120, 240));
    const double anorm = spectral_scale(a);
    const double breakdown = 1e-13 * anorm;

    std::vector<double> basis(static_cast<std::size_t>(n) * m_max);
    std::vector<double> alpha, beta;
    alpha.reserve(m_max);
    beta.reserve(m_max);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(n), w(n), y;
    for (auto& x : v) x = gauss(rng);
    v.normalize();
    std::copy(v.data(), v.data() + n, basis.data());

    Eigen::VectorXd best_resid;
    Eigen::VectorXd ritz_vals;
    Eigen::MatrixXd ritz_vecs;

    auto try_extract = [&](std::int64_t m, bool final_check) -> bool {
        Eigen::Map<const Eigen::VectorXd> av(alpha.data(), m);
        Eigen::VectorXd bv(m > 1 ? m - 1 : 0);
        for (std::int64_t i = 0; i + 1 < m; ++i) bv[i] = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes;
        tes.computeFromTridiagonal(av, bv);
        if (tes.info() != Eigen::Success) return false;
        const std::int64_t kk = std::min<std::int64_t>(k, m);
        // Cheap residual estimates from the last basis coefficient.
        const double blast = (m - 1 < static_cast<std::int64_t>(beta.size())) ? beta[m - 1] : 0.0;
        bool maybe = (kk == k);
        for (std::int64_t i = 0; i < kk && maybe; ++i)
            if (std::abs(blast * tes.eigenvectors()(m - 1, i)) > 0.5 * tol) maybe = false;
        if (!maybe && !final_check) return false;
        // Explicit residuals on assembled Ritz vectors.
        Eigen::Map<const Eigen::MatrixXd> vmat(basis.data(), n, m);
        Eigen::MatrixXd x = vmat * tes.eigenvectors().leftCols(kk);
        Eigen::VectorXd resid(kk);
        bool ok = (kk == k);
        for (std::int64_t i = 0; i < kk; ++i) {
            x.col(i).normalize();
            Eigen::VectorXd ax(n);
            a.apply(x.col(i).data(), ax.data());
            resid[i] = (ax - tes.eigenvalues()[i] * x.col(i)).norm();
            if (resid[i] > tol) ok = false;
        }
        best_resid = resid;
        ritz_vals = tes.eigenvalues().head(kk);
        ritz_vecs = x;
        return ok;
    };

    bool converged = false;
    std::int64_t m = 0;
    while (m < m_max && !converged) {
        // One Lanczos step from v_m.
        Eigen::Map<const Eigen::VectorXd> vm(basis.data() + m * n, n);
        a.apply(vm.data(), w.data());
        if (m > 0) {
            Eigen::Map<const Eigen::VectorXd> vprev(basis.data() + (m - 1) * n, n);
            w -= beta[m - 1] * vprev;
        }
        const double aj = vm.dot(w);
        alpha.push_back(aj);
        w -= aj * vm;
        // Two passes of full reorthogonalization.
        y.resize(m + 1);
        for (int pass = 0; pass < 2; ++pass) {
            kernels::gemv_t(basis.data(), n, m + 1, w.data(), y.data());
            kernels::gemv_sub(basis.data(), n, m + 1, y.data(), w.data());
        }
        double bj = w.norm();
        if (bj < breakdown) {
            // Invariant subspace found; continue in its orthogonal complement.
            for (auto& x : w) x = gauss(rng);
            y.resize(m + 1);
            for (int pass = 0; pass < 2; ++pass) {
                kernels::gemv_t(basis.data(), n, m + 1, w.data(), y.data());
                kernels::gemv_sub(basis.data(), n, m + 1, y.data(), w.data());
            }
            bj = 0.0;
            const double wn = w.norm();
            if (wn < 1e-14) break; // complement exhausted
            w /= wn;
        } else {
            w /= bj;
        }
        beta.push_back(bj);
        ++m;
        if (m < m_max) std::copy(w.data(), w.data() + n, basis.data() + m * n);
        if (m >= k && (m % opts.check_interval == 0 || m == m_max))
            converged = try_extract(m, false);
    }
    if (!converged) converged = try_extract(std::min(m, m_max), true);
    if (!converged) {
        std::ostringstream os;
        os << "Lanczos did not reach tol " << tol << " within " << m_max
           << " vectors; best residuals:";
        for (std::int64_t i = 0; i < best_resid.size(); ++i) os << ' ' << best_resid[i];
        throw convergence_error(os.str());
    }

    SpectralData s;
    s.op = std::make_shared<SymmetricOperator>(a);
    s.eigenvalues = ritz_vals;
    s.vectors = ritz_vecs;
    s.full = (k == n);
    s.residual_bound = best_resid.size() ? best_resid.maxCoeff() : 0.0;
    to_weighted(s.vectors, a.cell_measure());
    return s;
}

namespace {

SpectralData tridiagonal_lowest(const SymmetricOperator& a, std::int64_t k, double tol) {
    std::vector<double> d, e;
    a.tridiagonal(d, e);
    const std::int64_t n = a.dim();
    SpectralData s;
    s.op = std::make_shared<SymmetricOperator>(a);
    s.eigenvalues.resize(k);
    s.vectors.resize(n, k);
    std::vector<Eigen::VectorXd> cluster;
    double rmax = 0.0;
    double prev_lambda = 0.0;
    const double scale = spectral_scale(a);
    for (std::int64_t i = 0; i < k; ++i) {
        const double lam = tridiag::eigenvalue_k(d, e, i);
        // Vectors in the same near-degenerate cluster are orthogonalized
        // against each other; others start fresh.
        if (i > 0 && std::abs(lam - prev_lambda) > 1e-8 * scale) cluster.clear();
        Eigen::VectorXd x = tridiag_eigenvector(d, e, lam, cluster, 0x9e3779b9ull + i);
        cluster.push_back(x);
        Eigen::VectorXd ax(n);
        a.apply(x.data(), ax.data());
        const double resid = (ax - lam * x).norm();
        rmax = std::max(rmax, resid);
        s.eigenvalues[i] = lam;
        s.vectors.col(i) = x;
        prev_lambda = lam;
    }
    if (rmax > tol)
        throw convergence_error("tridiagonal inverse iteration residual " + std::to_string(rmax) +
                                " exceeds tol " + std::to_string(tol));
    s.full = (k == n);
    s.residual_bound = rmax;
    to_weighted(s.vectors, a.cell_measure());
    return s;
}

} // namespace

SpectralData lowest_eigenpairs(const SymmetricOperator& a, std::int64_t k, double tol,
                               const LanczosOptions& opts) {
    const std::int64_t n = a.dim();
    if (k < 1 || k > n) throw std::invalid_argument("requested eigenpair count out of range");
    if (n <= 2) {
        auto s = dense_eigendecomposition(a);
        SpectralData out = s;
        out.eigenvalues = s.eigenvalues.head(k).eval();
        out.vectors = s.vectors.leftCols(k).eval();
        out.full = (k == n);
        return out;
    }
    if (a.is_tridiagonal()) return tridiagonal_lowest(a, k, tol);
    if (n <= default_dense_budget && (k == n || 4 * k >= n || n <= 256)) {
        auto s = dense_eigendecomposition(a);
        if (k == n) return s;
        SpectralData out;
        out.op = s.op;
        out.eigenvalues = s.eigenvalues.head(k).eval();
        out.vectors = s.vectors.leftCols(k).eval();
        out.full = false;
        out.residual_bound = s.residual_bound;
        return out;
    }
    return lanczos_lowest(a, k, tol, opts);
}

CountResult counting_function(const SpectralData& s, double lambda) {
    CountResult r;
    for (std::int64_t i = 0; i < s.eigenvalues.size(); ++i)
        if (s.eigenvalues[i] <= lambda) ++r.count;
    if (!s.full && s.eigenvalues.size() > 0 && lambda >= s.eigenvalues[s.eigenvalues.size() - 1])
        r.lower_bound_only = true;
    if (!s.full && s.eigenvalues.size() == 0) r.lower_bound_only = true;
    return r;
}

namespace {

std::int64_t ldlt_count_below(const SymmetricOperator& a, double sigma) {
    const double scale = spectral_scale(a);
    double shift = sigma;
    for (int attempt = 0; attempt < 6; ++attempt) {
        Eigen::SparseMatrix<double> m = a.shifted(-shift).to_eigen_sparse();
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
        ldlt.compute(m);
        if (ldlt.info() == Eigen::Success) {
            const auto& dv = ldlt.vectorD();
            bool clean = dv.allFinite();
            std::int64_t cnt = 0;
            for (Eigen::Index i = 0; i < dv.size() && clean; ++i) {
                if (dv[i] == 0.0) clean = false;
                if (dv[i] < 0.0) ++cnt;
            }
            if (clean) return cnt;
        }
        // A pivot hit an eigenvalue; nudge the shift and retry.
        shift = sigma + scale * 1e-11 * std::pow(4.0, attempt);
    }
    throw convergence_error("inertia count failed near shift " + std::to_string(sigma));
}

} // namespace

std::int64_t count_below(const SymmetricOperator& a, double lambda) {
    const double tie = 1e-9 * std::max(1.0, std::abs(lambda));
    const double sigma = lambda + tie;
    if (a.dim() == 0) return 0;
    if (a.is_tridiagonal()) {
        std::vector<double> d, e;
        a.tridiagonal(d, e);
        return tridiag::count_below(d, e, sigma);
    }
    if (a.is_dense() || a.dim() <= 256) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.to_dense(),
                                                          Eigen::EigenvaluesOnly);
        std::int64_t cnt = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()[i] < sigma) ++cnt;
        return cnt;
    }
    return ldlt_count_below(a, sigma);
}

std::vector<double> eigenvalues_below(const SymmetricOperator& a, double lambda,
                                      double value_tol) {
    if (a.is_tridiagonal()) {
        std::vector<double> d, e;
        a.tridiagonal(d, e);
        return tridiag::eigenvalues_below(d, e, lambda);
    }
    const std::int64_t m = count_below(a, lambda);
    if (m == 0) return {};
    const std::int64_t n = a.dim();
    if (n <= default_dense_budget && (n <= 512 || 4 * m >= n)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.to_dense(),
                                                          Eigen::EigenvaluesOnly);
        return {es.eigenvalues().data(), es.eigenvalues().data() + m};
    }
    const std::int64_t k = std::min<std::int64_t>(m + 1, n);
    LanczosOptions opts;
    opts.max_subspace = std::min<std::int64_t>(n, std::max<std::int64_t>(8 * k + 120, 260));
    const double tol = std::max(value_tol, 1e-9) * std::max(1.0, std::abs(lambda));
    SpectralData s = lanczos_lowest(a, k, tol, opts);
    std::vector<double> out;
    for (std::int64_t i = 0; i < s.eigenvalues.size(); ++i)
        if (s.eigenvalues[i] <= lambda + 1e-9 * std::max(1.0, std::abs(lambda)))
            out.push_back(s.eigenvalues[i]);
    if (static_cast<std::int64_t>(out.size()) != m)
        throw convergence_error("eigenvalue extraction found " + std::to_string(out.size()) +
                                " of " + std::to_string(m) + " eigenvalues below " +
                                std::to_string(lambda));
    return out;
}

double smallest_eigenvalue(const SymmetricOperator& a, Eigen::VectorXd* vec, double tol) {
    if (a.dim() == 0) throw std::invalid_argument("empty operator");
    if (a.is_tridiagonal()) {
        std::vector<double> d, e;
        a.tridiagonal(d, e);
        const double lam = tridiag::eigenvalue_k(d, e, 0);
        if (vec) *vec = tridiag_eigenvector(d, e, lam, {}, 0xabcdef12ull);
        return lam;
    }
    if (a.dim() <= 512 || a.is_dense()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.to_dense());
        if (vec) *vec = es.eigenvectors().col(0);
        return es.eigenvalues()[0];
    }
    LanczosOptions opts;
    SpectralData s = lanczos_lowest(a, 1, tol * spectral_scale(a), opts);
    if (vec) {
        *vec = s.vectors.col(0);
        vec->normalize();
    }
    return s.eigenvalues[0];
}

double pencil_max_eigenvalue(const std::vector<double>& mdiag, const SymmetricOperator& s,
                             Eigen::VectorXd* vec, double tol, std::int64_t dense_budget) {
    const std::int64_t n = s.dim();
    if (static_cast<std::int64_t>(mdiag.size()) != n)
        throw std::invalid_argument("pencil diagonal size mismatch");
    if (smallest_eigenvalue(s) <= 0.0)
        throw std::invalid_argument("pencil base is not positive definite");
    double mmax = 0.0;
    for (double v : mdiag) {
        if (v < 0.0) throw std::invalid_argument("pencil numerator must be nonnegative");
        mmax = std::max(mmax, v);
    }
    if (mmax == 0.0) {
        if (vec) vec->setZero(n);
        return 0.0;
    }
    if (n <= std::min<std::int64_t>(dense_budget, 1500)) {
        Eigen::MatrixXd md = Eigen::MatrixXd::Zero(n, n);
        for (std::int64_t i = 0; i < n; ++i) md(i, i) = mdiag[i];
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(md, s.to_dense());
        if (ges.info() != Eigen::Success)
            throw convergence_error("dense generalized eigensolver failed");
        if (vec) {
            *vec = ges.eigenvectors().col(n - 1);
            vec->normalize();
        }
        return ges.eigenvalues()[n - 1];
    }

    // Power iteration on S^{-1} M. Tridiagonal S solves directly; otherwise
    // Jacobi-preconditioned CG.
    std::vector<double> d, e;
    const bool tri = s.is_tridiagonal();
    if (tri) s.tridiagonal(d, e);
    Eigen::VectorXd jacobi;
    if (!tri) {
        jacobi.resize(n);
        for (std::int64_t i = 0; i < n; ++i) {
            const double di = s.coeff(i, i);
            jacobi[i] = (di > 0.0) ? 1.0 / di : 1.0;
        }
    }
    auto solve_s = [&](const Eigen::VectorXd& rhs) {
        Eigen::VectorXd x = rhs;
        if (tri) {
            if (!tridiag_solve_shifted(d, e, 0.0, x))
                throw convergence_error("tridiagonal solve failed in pencil iteration");
            return x;
        }
        // CG from zero.
        x.setZero();
        Eigen::VectorXd r = rhs, z = jacobi.asDiagonal() * r, p = z, ap(n);
        double rz = r.dot(z);
        const double rhsn = rhs.norm();
        for (int it = 0; it < 20000; ++it) {
            s.apply(p.data(), ap.data());
            const double alpha = rz / p.dot(ap);
            x += alpha * p;
            r -= alpha * ap;
            if (r.norm() <= 1e-12 * rhsn) break;
            Eigen::VectorXd z2 = jacobi.asDiagonal() * r;
            const double rz2 = r.dot(z2);
            p = z2 + (rz2 / rz) * p;
            rz = rz2;
        }
        return x;
    };

    std::mt19937_64 rng(0x715eedULL);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd x(n);
    for (std::int64_t i = 0; i < n; ++i) x[i] = (mdiag[i] > 0.0) ? gauss(rng) : 0.0;
    if (x.norm() == 0.0) x.setOnes();
    x.normalize();
    double rho_prev = -1.0;
    Eigen::VectorXd mx(n), sx(n);
    for (int it = 0; it < 5000; ++it) {
        for (std::int64_t i = 0; i < n; ++i) mx[i] = mdiag[i] * x[i];
        Eigen::VectorXd xn = solve_s(mx);
        const double nn = xn.norm();
        if (!(nn > 0.0)) break;
        x = xn / nn;
        for (std::int64_t i = 0; i < n; ++i) mx[i] = mdiag[i] * x[i];
        s.apply(x.data(), sx.data());
        const double rho = x.dot(mx) / x.dot(sx);
        if (it > 3 && std::abs(rho - rho_prev) <= tol * std::max(1.0, std::abs(rho))) {
            if (vec) *vec = x;
            return rho;
        }
        rho_prev = rho;
    }
    if (vec) *vec = x;
    if (rho_prev < 0.0) throw convergence_error("pencil power iteration failed to converge");
    return rho_prev;
}

} // namespace spectra
