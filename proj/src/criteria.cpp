#include "spectra/criteria.hpp"

#include "spectra/calculus.hpp"
#include "spectra/errors.hpp"
#include "spectra/kernels.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace spectra {

NodeSet sublevel_set(const GridFunction& v, double n) {
    NodeSet out;
    for (std::int64_t i = 0; i < v.size(); ++i) {
        const double x = v[i];
        if (std::isnan(x)) throw std::invalid_argument("potential has undefined entries");
        if (x <= n && !std::isinf(x)) out.push_back(i);
    }
    return out;
}

double CubeProfile::tail_sup(double rho) const {
    double sup = 0.0;
    for (const auto& e : per_cube) {
        const double kk = std::hypot(static_cast<double>(e.k[0]), static_cast<double>(e.k[1]));
        if (kk >= rho) sup = std::max(sup, e.norm);
    }
    return sup;
}

CubeProfile cube_profile(const GridFunction& f, double cube_side) {
    const Grid& g = f.grid();
    double hmax = 0.0;
    for (int a = 0; a < g.dim(); ++a) hmax = std::max(hmax, g.spacing(a));
    if (cube_side < hmax)
        throw std::invalid_argument("cube side is below the grid spacing");

    CubeProfile out;
    for (int a = 0; a < g.dim(); ++a) {
        const double cells = std::max(1.0, std::round(cube_side / g.spacing(a)));
        out.rounding_defect =
            std::max(out.rounding_defect, std::abs(cube_side - cells * g.spacing(a)));
    }

    // Assign nodes to cubes centered at cube_side * k.
    const std::int64_t n = g.total_nodes();
    std::map<std::array<std::int64_t, 2>, std::int32_t> cube_ids;
    std::vector<std::int32_t> bucket(static_cast<std::size_t>(n));
    std::vector<std::array<std::int64_t, 2>> cubes;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto x = g.coords(i);
        std::array<std::int64_t, 2> k{0, 0};
        for (int a = 0; a < g.dim(); ++a)
            k[a] = static_cast<std::int64_t>(std::floor(x[a] / cube_side + 0.5));
        auto [it, fresh] = cube_ids.try_emplace(k, static_cast<std::int32_t>(cubes.size()));
        if (fresh) cubes.push_back(k);
        bucket[i] = it->second;
    }
    std::vector<double> sums(cubes.size(), 0.0);
    kernels::bucket_sumsq(f.values(), bucket, sums);

    const double w = g.cell_measure();
    out.per_cube.reserve(cubes.size());
    for (std::size_t c = 0; c < cubes.size(); ++c) {
        CubeProfile::Entry e;
        e.k = cubes[c];
        e.norm = std::sqrt(w * sums[c]);
        out.sup_norm = std::max(out.sup_norm, e.norm);
        out.per_cube.push_back(e);
    }
    std::sort(out.per_cube.begin(), out.per_cube.end(), [](const auto& a, const auto& b) {
        return std::array<std::int64_t, 2>{a.k[0], a.k[1]} <
               std::array<std::int64_t, 2>{b.k[0], b.k[1]};
    });

    double kmax = 0.0;
    for (const auto& e : out.per_cube)
        kmax = std::max(kmax, std::hypot(static_cast<double>(e.k[0]),
                                         static_cast<double>(e.k[1])));
    for (std::int64_t rho = 0; rho <= static_cast<std::int64_t>(std::ceil(kmax)); ++rho)
        out.tail.emplace_back(static_cast<double>(rho), out.tail_sup(static_cast<double>(rho)));
    return out;
}

namespace {

// Largest singular value by power iteration on M^T M (deterministic start).
double largest_singular_value(const Eigen::MatrixXd& m) {
    const std::int64_t n = m.cols();
    std::mt19937_64 rng(0xa11ce5ULL);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd x(n);
    for (auto& v : x) v = gauss(rng);
    x.normalize();
    double sv = 0.0, sv_prev = -1.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd y = m.transpose() * (m * x);
        const double nn = y.norm();
        if (nn == 0.0) return 0.0;
        x = y / nn;
        sv = std::sqrt(nn);
        if (it > 2 && std::abs(sv - sv_prev) <= 1e-11 * std::max(1.0, sv)) break;
        sv_prev = sv;
    }
    return sv;
}

} // namespace

double strichartz_ratio(const GridFunction& hfun, const SymmetricOperator& laplacian, double p,
                        const SpectralData* precomputed) {
    const int d = laplacian.grid().dim();
    if (!(p > d / 4.0))
        throw std::invalid_argument("fractional power p must exceed dim/4");
    for (std::int64_t i = 0; i < hfun.size(); ++i)
        if (!std::isfinite(hfun[i]))
            throw std::invalid_argument("weight function must be finite");
    const double denom = cube_profile(hfun, 1.0).sup_norm;
    if (denom == 0.0) throw std::invalid_argument("weight function vanishes identically");

    SpectralData local;
    const SpectralData* s = precomputed;
    if (!s) {
        local = dense_eigendecomposition(laplacian);
        s = &local;
    }
    Eigen::MatrixXd resolvent =
        functional_calculus(*s, [p](double t) { return std::pow(t + 1.0, -p); }).to_dense();
    const auto& active = laplacian.active_nodes();
    for (std::int64_t r = 0; r < laplacian.dim(); ++r) resolvent.row(r) *= hfun[active[r]];
    return largest_singular_value(resolvent) / denom;
}

double MolchanovProfile::min_tail(double rho) const {
    double best = plus_infinity();
    for (const auto& [x, mass] : profile)
        if (std::abs(x) >= rho) best = std::min(best, mass);
    return best;
}

MolchanovProfile molchanov_scan(const DiscreteMeasure& mu, double window, double stride) {
    const Grid& g = mu.grid();
    if (g.dim() != 1) throw std::invalid_argument("window scans are 1D");
    const double h = g.spacing(0);
    if (window < h)
        throw std::invalid_argument("window below the grid spacing would alias atoms");
    if (!(stride > 0.0)) throw std::invalid_argument("stride must be positive");

    MolchanovProfile out;
    out.window = window;
    out.stride = stride;

    // Prefix mass of the density and sorted atom positions.
    const std::int64_t n = g.total_nodes();
    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        prefix[i + 1] = prefix[i] + mu.density()[i] * g.cell_measure();
    std::vector<std::pair<double, double>> atoms; // (position, weight)
    for (const auto& a : mu.atoms()) atoms.emplace_back(g.coords(a.node)[0], a.weight);
    std::sort(atoms.begin(), atoms.end());
    std::vector<double> inf_pos;
    for (auto nmask : mu.infinite_mask()) inf_pos.push_back(g.coords(nmask)[0]);
    std::sort(inf_pos.begin(), inf_pos.end());

    const double lo = g.lower(0), hi = g.upper(0);
    const double eps = 1e-12 * std::max(1.0, std::abs(hi - lo));
    auto node_at_or_after = [&](double x) {
        // First node index with coordinate >= x.
        const double fi = std::ceil((x - lo) / h - 1.0 - 1e-12);
        return std::clamp<std::int64_t>(static_cast<std::int64_t>(fi), 0, n);
    };
    auto node_after = [&](double x) {
        const double fi = std::floor((x - lo) / h - 1.0 + 1e-12) + 1.0;
        return std::clamp<std::int64_t>(static_cast<std::int64_t>(fi), 0, n);
    };

    for (double x = lo; x + window <= hi + eps; x += stride) {
        const double xr = x + window;
        double mass;
        const bool has_inf =
            std::lower_bound(inf_pos.begin(), inf_pos.end(), x - eps) !=
            std::upper_bound(inf_pos.begin(), inf_pos.end(), xr + eps);
        if (has_inf) {
            mass = plus_infinity();
        } else {
            const std::int64_t i0 = node_at_or_after(x - eps);
            const std::int64_t i1 = node_after(xr + eps);
            mass = prefix[i1] - prefix[i0];
            auto a0 = std::lower_bound(atoms.begin(), atoms.end(),
                                       std::make_pair(x - eps, -1.0));
            for (auto it = a0; it != atoms.end() && it->first <= xr + eps; ++it)
                mass += it->second;
        }
        out.profile.emplace_back(x, mass);
    }
    return out;
}

double BenciProfile::sup_tail(double rho) const {
    double sup = 0.0;
    for (const auto& [x, val] : profile)
        if (std::hypot(x[0], x[1]) >= rho) sup = std::max(sup, val);
    return sup;
}

BenciProfile benci_fortunato_scan(const GridFunction& v1, double c, double ball_radius,
                                  double stride) {
    const Grid& g = v1.grid();
    for (std::int64_t i = 0; i < v1.size(); ++i) {
        const double v = v1[i];
        if (std::isnan(v)) throw std::invalid_argument("potential has undefined entries");
        if (!std::isinf(v) && v + c <= 0.0)
            throw std::invalid_argument("V1 + C must be positive on finite nodes");
    }
    if (!(ball_radius > 0.0)) throw std::invalid_argument("ball radius must be positive");

    BenciProfile out;
    out.ball_radius = ball_radius;

    // Integrand per node; infinity contributes nothing.
    const std::int64_t n = g.total_nodes();
    std::vector<double> integrand(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        integrand[i] = std::isinf(v1[i]) ? 0.0 : g.cell_measure() / (v1[i] + c);

    const std::int64_t nx = g.nodes(0);
    const std::int64_t ny = g.dim() == 2 ? g.nodes(1) : 1;
    const double hx = g.spacing(0);
    const double hy = g.dim() == 2 ? g.spacing(1) : 1.0;
    if (stride <= 0.0) {
        double extent = g.upper(0) - g.lower(0);
        stride = std::max(hx, extent / 160.0);
    }

    std::vector<double> xs, ys{0.0};
    for (double x = g.lower(0); x <= g.upper(0) + 1e-12; x += stride) xs.push_back(x);
    if (g.dim() == 2) {
        ys.clear();
        for (double y = g.lower(1); y <= g.upper(1) + 1e-12; y += stride) ys.push_back(y);
    }

    for (double yc : ys) {
        for (double xc : xs) {
            // Index window of the bounding box, then the exact ball test.
            const auto ix0 = std::max<std::int64_t>(
                0, static_cast<std::int64_t>(std::floor((xc - ball_radius - g.lower(0)) / hx)) - 1);
            const auto ix1 = std::min<std::int64_t>(
                nx - 1,
                static_cast<std::int64_t>(std::ceil((xc + ball_radius - g.lower(0)) / hx)));
            std::int64_t iy0 = 0, iy1 = 0;
            if (g.dim() == 2) {
                iy0 = std::max<std::int64_t>(
                    0,
                    static_cast<std::int64_t>(std::floor((yc - ball_radius - g.lower(1)) / hy)) -
                        1);
                iy1 = std::min<std::int64_t>(
                    ny - 1,
                    static_cast<std::int64_t>(std::ceil((yc + ball_radius - g.lower(1)) / hy)));
            }
            double acc = 0.0;
            for (std::int64_t iy = iy0; iy <= iy1; ++iy) {
                for (std::int64_t ix = ix0; ix <= ix1; ++ix) {
                    const std::int64_t node = g.index(ix, iy);
                    const auto xy = g.coords(node);
                    const double dx = xy[0] - xc;
                    const double dy = g.dim() == 2 ? xy[1] - yc : 0.0;
                    if (dx * dx + dy * dy <= ball_radius * ball_radius)
                        acc += integrand[node];
                }
            }
            out.profile.push_back({{xc, g.dim() == 2 ? yc : 0.0}, acc});
        }
    }
    return out;
}

namespace {

std::vector<double> minus_diagonal_on(const SymmetricOperator& base, const GridFunction& vminus) {
    if (!base.grid().same_layout(vminus.grid()))
        throw std::invalid_argument("negative part lives on a different grid");
    std::vector<double> d(base.dim());
    for (std::int64_t r = 0; r < base.dim(); ++r) {
        const double v = vminus[base.active_nodes()[r]];
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("negative part must be nonnegative and finite");
        d[r] = v;
    }
    return d;
}

std::vector<double> minus_diagonal_on(const SymmetricOperator& base,
                                      const DiscreteMeasure& mu) {
    if (!base.grid().same_layout(mu.grid()))
        throw std::invalid_argument("negative part lives on a different grid");
    if (mu.has_infinite())
        throw std::invalid_argument("negative measure must not carry an infinite part");
    const auto full = mu.form_diagonal();
    std::vector<double> d(base.dim());
    for (std::int64_t r = 0; r < base.dim(); ++r) d[r] = full[base.active_nodes()[r]];
    return d;
}

} // namespace

double form_bound_estimate(const GridFunction& vminus, const SymmetricOperator& base, double c) {
    return pencil_max_eigenvalue(minus_diagonal_on(base, vminus), base.shifted(c));
}

double form_bound_estimate(const DiscreteMeasure& mu_minus, const SymmetricOperator& base,
                           double c) {
    return pencil_max_eigenvalue(minus_diagonal_on(base, mu_minus), base.shifted(c));
}

double thm_main1_threshold(double q, double cq, double gamma, double s) {
    if (!(q >= 0.0 && q < 1.0))
        throw std::invalid_argument("threshold needs 0 <= q < 1, got q = " + std::to_string(q));
    return (1.0 - q) * (gamma + s) - cq;
}

namespace {

// Solve Q_ff x = -Q_fF 1 for the capacity QP with the fixed set pinned at 1.
// Rows are indexed in the operator's row space; fixed[r] marks pinned rows.
Eigen::VectorXd capacity_equality_solve(const SymmetricOperator& q,
                                        const std::vector<bool>& fixed) {
    const std::int64_t n = q.dim();
    std::vector<std::int64_t> free_of(static_cast<std::size_t>(n), -1);
    std::int64_t nfree = 0;
    for (std::int64_t r = 0; r < n; ++r)
        if (!fixed[r]) free_of[r] = nfree++;
    Eigen::VectorXd phi(n);
    for (std::int64_t r = 0; r < n; ++r) phi[r] = fixed[r] ? 1.0 : 0.0;
    if (nfree == 0) return phi;

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
    const auto& csr = q.csr();
    for (std::int64_t r = 0; r < n; ++r) {
        if (fixed[r]) continue;
        const std::int64_t fr = free_of[r];
        for (std::int64_t p = csr.row_ptr[r]; p < csr.row_ptr[r + 1]; ++p) {
            const std::int64_t ccol = csr.col[p];
            if (fixed[ccol])
                rhs[fr] -= csr.val[p];
            else
                trips.emplace_back(static_cast<int>(fr), static_cast<int>(free_of[ccol]),
                                   csr.val[p]);
        }
    }
    Eigen::SparseMatrix<double> qff(nfree, nfree);
    qff.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(qff);
    if (llt.info() != Eigen::Success)
        throw convergence_error("capacity system is not positive definite");
    Eigen::VectorXd xf = llt.solve(rhs);
    for (std::int64_t r = 0; r < n; ++r)
        if (!fixed[r]) phi[r] = xf[free_of[r]];
    return phi;
}

} // namespace

CapacityResult capacity(const NodeSet& u, const SymmetricOperator& a, int max_iterations) {
    CapacityResult out;
    out.minimizer = GridFunction(a.grid_ptr());
    if (u.empty()) {
        out.kkt_ok = true;
        return out;
    }
    std::vector<std::int64_t> urows;
    for (auto node : u) {
        const std::int64_t r = a.row_of_node(node);
        if (r < 0)
            throw std::invalid_argument("capacity target contains the masked node " +
                                        std::to_string(node));
        urows.push_back(r);
    }
    if (a.is_dense())
        throw std::invalid_argument("capacity expects a sparse assembled operator");

    const SymmetricOperator q = a.shifted(1.0);
    const std::int64_t n = q.dim();
    double scale = 1.0;
    for (std::int64_t r = 0; r < n; ++r) scale = std::max(scale, std::abs(q.coeff(r, r)));
    const double feas_tol = 1e-12 * scale;
    const double mult_tol = 1e-10 * scale;

    std::vector<bool> in_u(static_cast<std::size_t>(n), false);
    for (auto r : urows) in_u[r] = true;
    std::vector<bool> fixed = in_u; // start with every constraint active

    Eigen::VectorXd phi;
    int it = 0;
    for (; it < max_iterations; ++it) {
        phi = capacity_equality_solve(q, fixed);
        // Feasibility on released constraints.
        bool changed = false;
        for (auto r : urows)
            if (!fixed[r] && phi[r] < 1.0 - feas_tol) {
                fixed[r] = true;
                changed = true;
            }
        if (changed) continue;
        // Multipliers on the pinned set.
        Eigen::VectorXd grad = q.apply(phi);
        bool ok = true;
        for (auto r : urows)
            if (fixed[r] && grad[r] < -mult_tol) {
                fixed[r] = false;
                ok = false;
            }
        if (ok) break;
    }
    if (it == max_iterations)
        throw convergence_error("capacity active-set iteration exceeded its budget");

    out.iterations = it + 1;
    out.cap = a.cell_measure() * phi.dot(q.apply(phi));
    out.minimizer = a.extend_vector(phi);
    Eigen::VectorXd grad = q.apply(phi);
    out.kkt_ok = true;
    for (auto r : urows) {
        if (phi[r] < 1.0 - 1e-8) out.kkt_ok = false;
        if (fixed[r] && grad[r] < -mult_tol) out.kkt_ok = false;
    }
    return out;
}

namespace {

struct TwoFormAngles {
    double c0, r, phase; // value(theta) = c0 + r cos(2 theta - phase)
};

TwoFormAngles angles(const Eigen::Matrix2d& m) {
    TwoFormAngles a;
    a.c0 = 0.5 * (m(0, 0) + m(1, 1));
    const double d = 0.5 * (m(0, 0) - m(1, 1));
    a.r = std::hypot(d, m(0, 1));
    a.phase = std::atan2(m(0, 1), d);
    return a;
}

} // namespace

AvResult av_lambda(const DiscreteMeasure& mu, const NodeSet& g, double lambda,
                   const SymmetricOperator& a0) {
    if (!a0.grid().same_layout(mu.grid()))
        throw std::invalid_argument("measure lives on a different grid");
    AvResult out;
    out.lambda = lambda;
    out.region = g;

    // Region rows within the active mask; infinite-mask nodes are excluded
    // from the admissible support outright.
    const auto& inf_mask = mu.infinite_mask();
    std::vector<std::int64_t> rows;
    for (auto node : g) {
        if (std::binary_search(inf_mask.begin(), inf_mask.end(), node)) continue;
        const std::int64_t r = a0.row_of_node(node);
        if (r >= 0) rows.push_back(r);
    }
    if (rows.empty()) throw std::invalid_argument("region has no admissible nodes");

    const SymmetricOperator ag = a0.restrict_rows(rows);
    const auto mdiag_full = mu.form_diagonal();
    std::vector<double> mdiag(ag.dim());
    for (std::int64_t r = 0; r < ag.dim(); ++r)
        mdiag[r] = mdiag_full[ag.active_nodes()[r]];

    Eigen::VectorXd ground;
    const double lam_min = smallest_eigenvalue(ag, &ground);
    const double feas_tol = 1e-10 * std::max(1.0, std::abs(lambda));
    if (lambda < lam_min - feas_tol) {
        out.dual_lower = plus_infinity();
        out.primal_upper = plus_infinity();
        return out; // empty feasible set: inf over it is +inf
    }

    auto energy = [&](const Eigen::VectorXd& u) { return u.dot(ag.apply(u)); };
    auto mu_form = [&](const Eigen::VectorXd& u) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < u.size(); ++i) acc += mdiag[i] * u[i] * u[i];
        return acc;
    };
    auto mu_apply = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd y(u.size());
        for (std::int64_t i = 0; i < u.size(); ++i) y[i] = mdiag[i] * u[i];
        return y;
    };

    // Dual function d(beta) = lambda_min(M + beta A) - beta lambda, concave.
    struct Eval {
        double d;
        double slope;
        Eigen::VectorXd u;
    };
    auto eval = [&](double beta) {
        SymmetricOperator s = ag.scaled(beta).with_added_diagonal(mdiag);
        Eigen::VectorXd u;
        const double lm = smallest_eigenvalue(s, &u);
        return Eval{lm - beta * lambda, energy(u) - lambda, u};
    };

    bool all_zero = true;
    for (double v : mdiag) all_zero = all_zero && (v == 0.0);

    Eval best{};
    double beta_star = 0.0;
    if (all_zero) {
        best = Eval{0.0, 0.0, ground};
    } else {
        Eval e0 = eval(0.0);
        if (e0.slope <= 0.0) {
            best = e0;
        } else {
            double hi = 1.0;
            Eval ehi = eval(hi);
            int doublings = 0;
            std::ostringstream scanned;
            scanned.precision(6);
            while (ehi.slope > 0.0) {
                scanned << " (" << hi << ", " << ehi.d << ")";
                hi *= 2.0;
                if (++doublings > 60)
                    throw convergence_error(
                        "failed to bracket the dual multiplier; scanned profile:" +
                        scanned.str());
                ehi = eval(hi);
            }
            // Golden-section maximization of the concave dual on [0, hi].
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double a = 0.0, b = hi;
            double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
            Eval f1 = eval(x1), f2 = eval(x2);
            for (int iter = 0; iter < 200 && (b - a) > 1e-9 * std::max(1.0, b); ++iter) {
                if (f1.d >= f2.d) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - gr * (b - a);
                    f1 = eval(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + gr * (b - a);
                    f2 = eval(x2);
                }
            }
            best = (f1.d >= f2.d) ? f1 : f2;
            beta_star = (f1.d >= f2.d) ? x1 : x2;
        }
    }
    out.beta_star = beta_star;
    out.dual_lower = std::max(best.d, 0.0); // mu >= 0 keeps Av nonnegative

    // Primal witness at the optimal multiplier, with an exact two-mode
    // feasibility repair on span{u*, ground}.
    Eigen::VectorXd u = best.u;
    u.normalize();
    double uenergy = energy(u);
    if (uenergy > lambda + feas_tol) {
        Eigen::VectorXd q1 = u;
        Eigen::VectorXd q2 = ground - q1.dot(ground) * q1;
        const double q2n = q2.norm();
        if (q2n > 1e-10) {
            q2 /= q2n;
            Eigen::Matrix2d at, mt;
            Eigen::VectorXd aq1 = ag.apply(q1), aq2 = ag.apply(q2);
            at << q1.dot(aq1), q1.dot(aq2), q1.dot(aq2), q2.dot(aq2);
            Eigen::VectorXd mq1 = mu_apply(q1), mq2 = mu_apply(q2);
            mt << q1.dot(mq1), q1.dot(mq2), q1.dot(mq2), q2.dot(mq2);
            const auto ea = angles(at);
            const auto em = angles(mt);
            constexpr double pi = 3.14159265358979323846;
            double best_theta = 0.0;
            double best_mu = plus_infinity();
            auto consider = [&](double theta) {
                const double e = ea.c0 + ea.r * std::cos(2.0 * theta - ea.phase);
                if (e > lambda + feas_tol) return;
                const double mval = em.c0 + em.r * std::cos(2.0 * theta - em.phase);
                if (mval < best_mu) {
                    best_mu = mval;
                    best_theta = theta;
                }
            };
            // Both forms have period pi in theta: the free minimizer of the
            // mu form plus the two boundary roots of E(theta) = lambda.
            consider(0.5 * (em.phase + pi));
            if (ea.r > 0.0) {
                const double ce = std::clamp((lambda - ea.c0) / ea.r, -1.0, 1.0);
                const double dth = std::acos(ce);
                consider(0.5 * (ea.phase + dth));
                consider(0.5 * (ea.phase - dth));
            }
            if (std::isfinite(best_mu)) {
                u = std::cos(best_theta) * q1 + std::sin(best_theta) * q2;
                u.normalize();
                uenergy = energy(u);
            }
        }
    }
    if (uenergy <= lambda + feas_tol) {
        out.primal_upper = mu_form(u);
        // Weighted-unit nodal values.
        out.witness = ag.extend_vector(u / std::sqrt(ag.cell_measure()));
    } else {
        out.primal_upper = plus_infinity();
    }
    return out;
}

double weyl_residual(const SymmetricOperator& a, double lambda, const NodeSet& k) {
    std::set<std::int64_t> excluded(k.begin(), k.end());
    std::vector<std::int64_t> rows;
    for (std::int64_t r = 0; r < a.dim(); ++r)
        if (!excluded.count(a.active_nodes()[r])) rows.push_back(r);
    if (rows.empty())
        throw std::invalid_argument("the complement of K has no active nodes");

    // Compression of (A - lambda)^2 to the complement.
    Eigen::SparseMatrix<double> m = a.shifted(-lambda).to_eigen_sparse();
    Eigen::SparseMatrix<double> m2 = (m * m).pruned();
    std::vector<std::int64_t> newrow(static_cast<std::size_t>(a.dim()), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) newrow[rows[i]] = static_cast<std::int64_t>(i);
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<std::int64_t> active;
    for (auto r : rows) active.push_back(a.active_nodes()[r]);
    for (int outer = 0; outer < m2.outerSize(); ++outer) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m2, outer); it; ++it) {
            const std::int64_t i = newrow[it.row()];
            const std::int64_t j = newrow[it.col()];
            if (i >= 0 && j >= 0 && i <= j) trips.emplace_back(i, j, it.value());
        }
    }
    auto comp = SymmetricOperator::from_triplets(a.grid_ptr(), active, trips);
    double lam_min;
    if (comp.dim() <= default_dense_budget) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comp.to_dense(),
                                                          Eigen::EigenvaluesOnly);
        lam_min = es.eigenvalues()[0];
    } else {
        lam_min = smallest_eigenvalue(comp);
    }
    return std::sqrt(std::max(lam_min, 0.0));
}

bool OperatorSpec::has_measure() const {
    return comb.has_value() || infinite_region.has_value() ||
           mu_plus_density.family != ScalarField::Family::zero ||
           mu_minus_density.family != ScalarField::Family::zero;
}

DiscreteMeasure OperatorSpec::build_mu_plus(const GridPtr& grid) const {
    DiscreteMeasure m = comb ? DiscreteMeasure::comb(grid, comb->spacing, comb->weight)
                             : DiscreteMeasure::zero(grid);
    if (mu_plus_density.family != ScalarField::Family::zero) {
        auto f = GridFunction::sample(grid, mu_plus_density);
        DiscreteMeasure base(grid, f.values(), m.atoms(), m.infinite_mask());
        m = std::move(base);
    }
    if (infinite_region) {
        std::vector<std::int64_t> masked;
        for (std::int64_t i = 0; i < grid->total_nodes(); ++i)
            if (infinite_region->contains(grid->coords(i), grid->dim()))
                masked.push_back(i);
        m.set_infinite(std::move(masked));
    }
    return m;
}

DiscreteMeasure OperatorSpec::build_mu_minus(const GridPtr& grid) const {
    if (mu_minus_density.family == ScalarField::Family::zero)
        return DiscreteMeasure::zero(grid);
    return DiscreteMeasure::from_density(grid, mu_minus_density);
}

SymmetricOperator OperatorSpec::assemble(const GridPtr& grid) const {
    SymmetricOperator h = assemble_dirichlet_laplacian(grid);
    h = assemble_schrodinger(h, GridFunction::sample(grid, vplus),
                             GridFunction::sample(grid, vminus), klmn);
    if (has_measure()) h = add_measure(h, build_mu_plus(grid), build_mu_minus(grid), klmn);
    return h;
}

std::string OperatorSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "v+:" << vplus.describe() << "|v-:" << vminus.describe()
       << "|mu+:" << mu_plus_density.describe() << "|mu-:" << mu_minus_density.describe();
    if (comb) os << "|comb:" << comb->spacing << "," << comb->weight.describe();
    if (infinite_region)
        os << "|inf:" << static_cast<int>(infinite_region->kind) << ","
           << static_cast<int>(infinite_region->norm) << "," << infinite_region->radius;
    os << "|klmn:" << static_cast<int>(klmn.mode) << "," << klmn.q << "," << klmn.cq;
    return os.str();
}

TruncationFamily::TruncationFamily(int dim, double h, std::vector<double> radii,
                                   OperatorSpec spec, std::int64_t node_budget)
    : dim_(dim), h_(h), radii_(std::move(radii)), spec_(std::move(spec)),
      node_budget_(node_budget) {
    if (radii_.empty()) throw config_error("truncation family needs at least one radius");
    for (std::size_t i = 1; i < radii_.size(); ++i)
        if (!(radii_[i] > radii_[i - 1]))
            throw config_error("truncation radii must be strictly increasing");
    slots_.resize(radii_.size());
}

const SymmetricOperator& TruncationFamily::op(std::int64_t i) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = slots_[static_cast<std::size_t>(i)];
    if (!slot) {
        auto grid = build_centered_grid(dim_, radii_[i], h_, node_budget_);
        slot = std::make_unique<SymmetricOperator>(spec_.assemble(grid));
    }
    return *slot;
}

const char* to_string(ProbeClass c) {
    switch (c) {
    case ProbeClass::discrete_below:
        return "discrete-below-lambda";
    case ProbeClass::essential_suspected:
        return "essential-suspected";
    case ProbeClass::inconclusive:
        return "inconclusive";
    }
    return "unknown";
}

std::vector<ProbeVerdict> ess_spectrum_probe(const TruncationFamily& family,
                                             const std::vector<double>& lambda_grid,
                                             double cauchy_rel_tol) {
    const std::int64_t m = family.size();
    if (m < 3) throw std::invalid_argument("the probe needs at least 3 radii");

    std::vector<ProbeVerdict> verdicts;
    for (double lambda : lambda_grid) {
        ProbeVerdict v;
        v.threshold = lambda;
        bool solver_failed = false;
        for (std::int64_t j = 0; j < m && !solver_failed; ++j) {
            try {
                v.counts.push_back(count_below(family.op(j), lambda));
            } catch (const std::exception& e) {
                solver_failed = true;
                v.note = std::string("eigensolver failure at radius ") +
                         std::to_string(family.radius(j)) + ": " + e.what();
            }
        }
        if (solver_failed) {
            v.classification = ProbeClass::inconclusive;
            verdicts.push_back(std::move(v));
            continue;
        }
        const std::int64_t c1 = v.counts[m - 3], c2 = v.counts[m - 2], c3 = v.counts[m - 1];
        if (c1 == c2 && c2 == c3) {
            // Counts are stable; require every retained eigenvalue to have
            // settled between the last two radii.
            bool cauchy_all = true;
            if (c3 > 0) {
                try {
                    const auto prev = eigenvalues_below(family.op(m - 2), lambda);
                    const auto last = eigenvalues_below(family.op(m - 1), lambda);
                    if (static_cast<std::int64_t>(prev.size()) == c3 &&
                        static_cast<std::int64_t>(last.size()) == c3) {
                        for (std::int64_t i = 0; i < c3; ++i) {
                            const bool ok =
                                std::abs(last[i] - prev[i]) <=
                                cauchy_rel_tol * std::max(1.0, std::abs(last[i]));
                            v.cauchy_flags.push_back(ok);
                            cauchy_all = cauchy_all && ok;
                        }
                        v.eigenvalues = last;
                    } else {
                        cauchy_all = false;
                        v.note = "eigenvalue extraction disagreed with the counts";
                    }
                } catch (const std::exception& e) {
                    cauchy_all = false;
                    v.note = std::string("eigenvalue extraction failed: ") + e.what();
                }
            }
            v.classification =
                cauchy_all ? ProbeClass::discrete_below : ProbeClass::inconclusive;
            if (!cauchy_all && v.note.empty())
                v.note = "counts stable but eigenvalues still moving";
        } else if (c1 < c2 && c2 < c3) {
            v.classification = ProbeClass::essential_suspected;
        } else {
            v.classification = ProbeClass::inconclusive;
            v.note = "counts neither stable nor strictly increasing";
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

} // namespace spectra
