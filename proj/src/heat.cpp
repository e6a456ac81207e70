#include "spectra/heat.hpp"

#include "spectra/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace spectra {

namespace {

// exp(-t T) e_1 for the Lanczos tridiagonal, via a small dense solve.
Eigen::VectorXd expm_tridiag_e1(const std::vector<double>& alpha,
                                const std::vector<double>& beta, std::int64_t m, double t) {
    Eigen::Map<const Eigen::VectorXd> av(alpha.data(), m);
    Eigen::VectorXd bv(m > 1 ? m - 1 : 0);
    for (std::int64_t i = 0; i + 1 < m; ++i) bv[i] = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(av, bv);
    Eigen::VectorXd coeff = es.eigenvectors().row(0).transpose();
    Eigen::VectorXd y(m);
    for (std::int64_t i = 0; i < m; ++i) coeff[i] *= std::exp(-t * es.eigenvalues()[i]);
    y = es.eigenvectors() * coeff;
    return y;
}

// Smallest Ritz value of the Lanczos tridiagonal.
double theta_min(const std::vector<double>& alpha, const std::vector<double>& beta,
                 std::int64_t m) {
    std::vector<double> d(alpha.begin(), alpha.begin() + m);
    std::vector<double> e(m > 1 ? m - 1 : 0);
    for (std::int64_t i = 0; i + 1 < m; ++i) e[i] = beta[i];
    return spectra::tridiag::eigenvalue_k(d, e, 0, 1e-12);
}

// One Krylov step of exp(-dt A) v. Returns false when the subspace cap was
// reached before the error estimate fell under tol. Convergence demands
// three things at once: the classical last-coefficient bound, stagnation of
// the coefficient vector between checks, and a settled bottom Ritz value
// (the last coefficient alone is blind to slow modes that have not yet
// entered the subspace).
bool expv_single(const SymmetricOperator& a, double dt, const Eigen::VectorXd& v,
                 double tol, std::int64_t m_max, Eigen::VectorXd& out, double& err_est) {
    const std::int64_t n = a.dim();
    const double vnorm = v.norm();
    if (vnorm == 0.0) {
        out = v;
        err_est = 0.0;
        return true;
    }
    Eigen::MatrixXd basis(n, std::min<std::int64_t>(m_max, n));
    basis.col(0) = v / vnorm;
    std::vector<double> alpha, beta;
    Eigen::VectorXd w(n);
    const std::int64_t cap = basis.cols();
    std::int64_t m = 0;
    bool breakdown = false;
    Eigen::VectorXd y_prev;
    double theta_prev = std::numeric_limits<double>::quiet_NaN();
    constexpr int check_every = 6;
    while (m < cap) {
        a.apply(basis.col(m).data(), w.data());
        if (m > 0) w -= beta[m - 1] * basis.col(m - 1);
        const double aj = basis.col(m).dot(w);
        alpha.push_back(aj);
        w -= aj * basis.col(m);
        const double bj = w.norm();
        ++m;
        if (bj < 1e-14 * std::max(1.0, std::abs(aj))) {
            breakdown = true; // exact invariant subspace
            beta.push_back(0.0);
            break;
        }
        beta.push_back(bj);
        if (m < cap) basis.col(m) = w / bj;
        if (m % check_every == 0) {
            Eigen::VectorXd y = expm_tridiag_e1(alpha, beta, m, dt);
            const double saad = vnorm * bj * std::abs(y[m - 1]);
            double diff = std::numeric_limits<double>::infinity();
            if (y_prev.size() > 0) {
                Eigen::VectorXd padded = Eigen::VectorXd::Zero(m);
                padded.head(y_prev.size()) = y_prev;
                diff = vnorm * (y - padded).norm();
            }
            const double tmin = theta_min(alpha, beta, m);
            const bool theta_settled =
                !std::isnan(theta_prev) &&
                std::abs(tmin - theta_prev) <= 1e-9 * std::max(1.0, std::abs(tmin));
            y_prev = y;
            theta_prev = tmin;
            if (saad <= 0.5 * tol && diff <= 0.5 * tol && theta_settled) {
                out = vnorm * (basis.leftCols(m) * y);
                err_est = saad + diff;
                return true;
            }
        }
    }
    Eigen::VectorXd y = expm_tridiag_e1(alpha, beta, m, dt);
    const double blast = beta.empty() ? 0.0 : beta[m - 1];
    const double est = breakdown ? 0.0 : vnorm * blast * std::abs(y[m - 1]);
    out = vnorm * (basis.leftCols(m) * y);
    err_est = est;
    return breakdown;
}

} // namespace

HeatResult krylov_expv(const SymmetricOperator& a, double t, const Eigen::VectorXd& v,
                       const KrylovOptions& opts) {
    if (t < 0.0) throw std::invalid_argument("heat propagation needs t >= 0");
    if (v.size() != a.dim()) throw std::invalid_argument("operator/vector dimension mismatch");
    HeatResult res;
    if (t == 0.0) {
        res.value = v;
        return res;
    }
    double remaining = t;
    // Initial step so the subspace cap comfortably covers the Bessel decay
    // width sqrt(2 * (dt lam_max / 2) * digits) of the exponential.
    const double lam_hi = std::max(1e-12, gershgorin_bounds(a).second);
    const double m_eff = 0.8 * static_cast<double>(opts.max_subspace);
    double dt = std::min(t, m_eff * m_eff / (28.0 * lam_hi));
    res.value = v;
    int halvings = 0;
    Eigen::VectorXd next;
    while (remaining > 0.0) {
        const double step = std::min(dt, remaining);
        double err = 0.0;
        const double step_tol = opts.tol * (step / t);
        if (expv_single(a, step, res.value, step_tol, opts.max_subspace, next, err)) {
            res.value.swap(next);
            res.error_bound += err;
            remaining -= step;
        } else {
            dt = step / 2.0;
            if (++halvings > opts.max_halvings)
                throw convergence_error("Krylov exponential failed to converge; residual "
                                        "estimate " +
                                        std::to_string(err) + " at dt " + std::to_string(dt));
        }
    }
    return res;
}

Eigen::VectorXd heat_apply(const SymmetricOperator& a, double t, const Eigen::VectorXd& v,
                           const KrylovOptions& opts) {
    if (t < 0.0) throw std::invalid_argument("heat propagation needs t >= 0");
    if (t == 0.0) return v;
    if (a.is_dense() || a.dim() <= 512) {
        SpectralData s = dense_eigendecomposition(a, std::max<std::int64_t>(a.dim(), 1));
        return heat_apply(s, t, v);
    }
    return krylov_expv(a, t, v, opts).value;
}

GridFunction heat_apply(const SymmetricOperator& a, double t, const GridFunction& v,
                        const KrylovOptions& opts) {
    return a.extend_vector(heat_apply(a, t, a.restrict_function(v), opts));
}

Eigen::VectorXd heat_apply(const SpectralData& s, double t, const Eigen::VectorXd& v) {
    if (t < 0.0) throw std::invalid_argument("heat propagation needs t >= 0");
    if (t == 0.0) return v;
    const double w = s.a().cell_measure();
    Eigen::VectorXd c = w * (s.vectors.transpose() * v);
    for (std::int64_t i = 0; i < c.size(); ++i) c[i] *= std::exp(-t * s.eigenvalues[i]);
    return s.vectors * c;
}

Eigen::MatrixXd heat_kernel_matrix(const SymmetricOperator& a, double t,
                                   std::int64_t dense_budget, double column_tol) {
    const std::int64_t n = a.dim();
    if (n > dense_budget)
        throw budget_error("heat kernel materialization of dimension " + std::to_string(n) +
                           " exceeds the budget " + std::to_string(dense_budget));
    Eigen::MatrixXd k(n, n);
    KrylovOptions opts;
    opts.tol = column_tol;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t j = 0; j < n; ++j) {
        Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
        ej[j] = 1.0;
        k.col(j) = krylov_expv(a, t, ej, opts).value;
    }
    return k;
}

HeatKernelNorms heat_kernel_norms(const SymmetricOperator& a, double t,
                                  std::int64_t dense_budget) {
    const Eigen::MatrixXd k = heat_kernel_matrix(a, t, dense_budget);
    const double sqw = std::sqrt(a.cell_measure());
    HeatKernelNorms norms;
    for (std::int64_t i = 0; i < k.rows(); ++i)
        norms.c_2inf = std::max(norms.c_2inf, k.row(i).norm() / sqw);
    for (std::int64_t j = 0; j < k.cols(); ++j)
        norms.c_12 = std::max(norms.c_12, k.col(j).norm() / sqw);
    if (std::abs(norms.c_12 - norms.c_2inf) > 1e-8 * std::max(1.0, norms.c_12))
        throw convergence_error("kernel norm duality violated: c_12 = " +
                                std::to_string(norms.c_12) + ", c_2inf = " +
                                std::to_string(norms.c_2inf));
    return norms;
}

double semigroup_form_inequality_check(const SymmetricOperator& a, double t,
                                       std::int64_t samples, std::uint64_t seed) {
    if (a.gamma() && *a.gamma() < 0.0)
        throw std::invalid_argument("the inequality needs a nonnegative operator");
    SpectralData s = dense_eigendecomposition(a);
    const std::int64_t n = a.dim();
    // Everything reduces to coefficients in the eigenbasis:
    // defect(f) = sum_k [(1 - e^{-t lam})^2 - 2 t lam] c_k^2.
    Eigen::VectorXd factor(n);
    for (std::int64_t k = 0; k < n; ++k) {
        const double lam = s.eigenvalues[k];
        const double d = 1.0 - std::exp(-t * lam);
        factor[k] = d * d - 2.0 * t * lam;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double worst = -std::numeric_limits<double>::infinity();
    const double w = a.cell_measure();
    for (std::int64_t trial = 0; trial < samples; ++trial) {
        Eigen::VectorXd f(n);
        for (auto& x : f) x = gauss(rng);
        Eigen::VectorXd c = w * (s.vectors.transpose() * f);
        double defect = 0.0;
        for (std::int64_t k = 0; k < n; ++k) defect += factor[k] * c[k] * c[k];
        worst = std::max(worst, defect);
    }
    // Eigenvector samples have a single coefficient.
    for (std::int64_t k = 0; k < n; ++k) worst = std::max(worst, factor[k]);
    return worst;
}

SuperPoincareResult super_poincare_beta(const SymmetricOperator& a, double r,
                                        std::int64_t samples, std::uint64_t seed,
                                        const SpectralData* precomputed) {
    if (!(r > 0.0)) throw std::invalid_argument("super Poincare radius r must be positive");
    if (a.gamma() && *a.gamma() < 0.0)
        throw std::invalid_argument("certification needs a nonnegative operator");

    SuperPoincareResult out;
    out.r = r;
    out.t = r / 4.0;
    const auto norms = heat_kernel_norms(a, out.t);
    out.c_12 = norms.c_12;
    out.c_2inf = norms.c_2inf;
    out.beta_certified = 2.0 * norms.c_12 * norms.c_12;

    const std::int64_t n = a.dim();
    const double w = a.cell_measure();
    double observed = -std::numeric_limits<double>::infinity();
    auto consider = [&](const Eigen::VectorXd& f) {
        const double l2sq = w * f.squaredNorm();
        if (l2sq == 0.0) return;
        const double energy = quadratic_form(a, f);
        const double l1 = w * f.lpNorm<1>();
        observed = std::max(observed, (l2sq - r * energy) / (l1 * l1));
    };
    // Node indicators are the extremal candidates on a lattice; their value
    // (1 - r A_ii) / w comes straight off the diagonal.
    for (std::int64_t i = 0; i < n; ++i)
        observed = std::max(observed, (1.0 - r * a.coeff(i, i)) / w);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd f(n);
    for (std::int64_t trial = 0; trial < samples; ++trial) {
        for (auto& x : f) x = gauss(rng);
        consider(f);
    }
    if (precomputed) {
        for (std::int64_t k = 0; k < precomputed->retained(); ++k)
            consider(precomputed->vectors.col(k));
    } else if (n <= 1500) {
        SpectralData s = dense_eigendecomposition(a);
        for (std::int64_t k = 0; k < n; ++k) consider(s.vectors.col(k));
    }
    out.beta_observed = observed;
    return out;
}

} // namespace spectra
