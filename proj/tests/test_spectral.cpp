#include "doctest.h"

#include "spectra/assemble.hpp"
#include "spectra/calculus.hpp"
#include "spectra/eigsolve.hpp"
#include "spectra/errors.hpp"

#include <cmath>
#include <random>

using namespace spectra;

namespace {

GridPtr grid_1d(double lo, double hi, std::int64_t n) {
    Grid::Spec s;
    s.dim = 1;
    s.lower = {lo, 0.0};
    s.upper = {hi, 0.0};
    s.nodes = {n, 1};
    return build_grid(s);
}

GridPtr grid_2d(double lo, double hi, std::int64_t n) {
    Grid::Spec s;
    s.dim = 2;
    s.lower = {lo, lo};
    s.upper = {hi, hi};
    s.nodes = {n, n};
    return build_grid(s);
}

SymmetricOperator diag_operator(std::vector<double> d) {
    auto g = grid_1d(0.0, 1.0, static_cast<std::int64_t>(d.size()));
    std::vector<std::int64_t> active(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) active[i] = static_cast<std::int64_t>(i);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < d.size(); ++i)
        trips.emplace_back(static_cast<int>(i), static_cast<int>(i), d[i]);
    return SymmetricOperator::from_triplets(g, active, trips);
}

SymmetricOperator random_symmetric(std::int64_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-scale, scale);
    Eigen::MatrixXd m(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j <= i; ++j) {
            m(i, j) = uni(rng);
            m(j, i) = m(i, j);
        }
    auto g = grid_1d(0.0, 1.0, n);
    std::vector<std::int64_t> active(n);
    for (std::int64_t i = 0; i < n; ++i) active[i] = i;
    return SymmetricOperator::from_dense(g, active, m);
}

} // namespace

TEST_CASE("dense decomposition sorts and reconstructs") {
    auto a = diag_operator({3.0, 1.0, 2.0});
    auto s = dense_eigendecomposition(a);
    CHECK(s.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(s.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(s.eigenvalues[2] == doctest::Approx(3.0));
    CHECK(s.full);

    // Weighted orthonormality on a random 20x20.
    auto r = random_symmetric(20, 42);
    auto sr = dense_eigendecomposition(r);
    const double w = r.cell_measure();
    Eigen::MatrixXd gram = w * sr.vectors.transpose() * sr.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(dense_eigendecomposition(r, 10), budget_error);
}

TEST_CASE("closed-form laplacian spectrum through the dense path") {
    auto g = grid_1d(0.0, 1.0, 50);
    auto lap = assemble_dirichlet_laplacian(g);
    auto s = dense_eigendecomposition(lap);
    const double h = g->spacing(0);
    constexpr double pi = 3.14159265358979323846;
    for (int k = 1; k <= 50; ++k) {
        const double sk = std::sin(k * pi / 102.0);
        CHECK(s.eigenvalues[k - 1] ==
              doctest::Approx(4.0 / (h * h) * sk * sk).epsilon(1e-10));
    }
}

TEST_CASE("lanczos agrees with the dense oracle") {
    auto g = grid_2d(-1.0, 1.0, 20);
    auto lap = assemble_dirichlet_laplacian(g);
    auto dense = dense_eigendecomposition(lap);
    auto lz = lanczos_lowest(lap, 10, 1e-9);
    for (int k = 0; k < 10; ++k)
        CHECK(lz.eigenvalues[k] == doctest::Approx(dense.eigenvalues[k]).epsilon(1e-8));
    CHECK(lz.residual_bound <= 1e-9);

    // k = dimension routes to the full decomposition.
    auto a = random_symmetric(30, 7);
    auto full = lowest_eigenpairs(a, 30, 1e-9);
    CHECK(full.full);
    auto ds = dense_eigendecomposition(a);
    for (int k = 0; k < 30; ++k)
        CHECK(full.eigenvalues[k] == doctest::Approx(ds.eigenvalues[k]).epsilon(1e-12));
}

TEST_CASE("tridiagonal bisection engine matches dense") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    const int n = 40;
    std::vector<double> d(n), e(n - 1);
    for (auto& v : d) v = gauss(rng);
    for (auto& v : e) v = gauss(rng);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) t(i, i) = d[i];
    for (int i = 0; i + 1 < n; ++i) {
        t(i, i + 1) = e[i];
        t(i + 1, i) = e[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    for (int k = 0; k < n; ++k)
        CHECK(tridiag::eigenvalue_k(d, e, k) ==
              doctest::Approx(es.eigenvalues()[k]).epsilon(1e-11));
    for (double sigma : {-2.0, -0.5, 0.0, 0.4, 1.7}) {
        std::int64_t cnt = 0;
        for (int i = 0; i < n; ++i)
            if (es.eigenvalues()[i] < sigma) ++cnt;
        CHECK(tridiag::count_below(d, e, sigma) == cnt);
    }
    auto below = tridiag::eigenvalues_below(d, e, 0.4);
    std::int64_t expect = 0;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()[i] <= 0.4) ++expect;
    CHECK(static_cast<std::int64_t>(below.size()) == expect);
}

TEST_CASE("inertia counts match dense on a 2d operator") {
    auto g = grid_2d(0.0, 1.0, 18);
    auto lap = assemble_dirichlet_laplacian(g);
    auto vp = GridFunction::sample(g, ScalarField::poly({{30.0, {2, 0}}, {30.0, {0, 2}}}));
    auto a = assemble_schrodinger(lap, vp, GridFunction(g));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.to_dense(), Eigen::EigenvaluesOnly);
    for (double lam : {40.0, 90.0, 200.0, 1000.0}) {
        std::int64_t cnt = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()[i] <= lam) ++cnt;
        CHECK(count_below(a, lam) == cnt);
    }
    auto vals = eigenvalues_below(a, 200.0);
    CHECK(static_cast<std::int64_t>(vals.size()) == count_below(a, 200.0));
    for (std::size_t i = 0; i < vals.size(); ++i)
        CHECK(vals[i] == doctest::Approx(es.eigenvalues()[i]).epsilon(1e-8));
}

TEST_CASE("counting function semantics") {
    auto s = dense_eigendecomposition(diag_operator({1.0, 2.0, 3.0}));
    CHECK(counting_function(s, 2.5).count == 2);
    CHECK(counting_function(s, 0.5).count == 0);
    CHECK_FALSE(counting_function(s, 2.5).lower_bound_only);

    // Partial data can only bound from below at or past its last eigenvalue.
    auto g = grid_1d(0.0, 1.0, 60);
    auto lap = assemble_dirichlet_laplacian(g);
    auto part = lowest_eigenpairs(lap, 5, 1e-9);
    auto res = counting_function(part, part.eigenvalues[4] + 1.0);
    CHECK(res.count == 5);
    CHECK(res.lower_bound_only);

    // Box counting grows like sqrt(lambda).
    constexpr double pi = 3.14159265358979323846;
    auto gp = grid_1d(0.0, pi, 400);
    auto sp = dense_eigendecomposition(assemble_dirichlet_laplacian(gp));
    for (double lam : {30.0, 100.0, 300.0}) {
        const auto n = counting_function(sp, lam).count;
        CHECK(std::abs(n - std::sqrt(lam)) <= 1.0);
    }
}

TEST_CASE("functional calculus basics") {
    auto a = diag_operator({0.0, std::log(2.0)});
    auto s = dense_eigendecomposition(a);
    auto e = functional_calculus(s, [](double t) { return std::exp(-t); });
    CHECK(e.coeff(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.coeff(1, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(e.coeff(0, 1)) < 1e-14);

    auto r = random_symmetric(25, 9);
    auto sr = dense_eigendecomposition(r);
    auto ident = functional_calculus(sr, [](double) { return 1.0; });
    CHECK((ident.to_dense() - Eigen::MatrixXd::Identity(25, 25)).norm() < 1e-10);
    auto same = functional_calculus(sr, [](double t) { return t; });
    CHECK((same.to_dense() - r.to_dense()).norm() < 1e-10 * r.to_dense().norm());

    auto part = lowest_eigenpairs(assemble_dirichlet_laplacian(grid_1d(0, 1, 40)), 3, 1e-9);
    CHECK_THROWS_AS(functional_calculus(part, [](double t) { return t; }),
                    std::invalid_argument);
}

TEST_CASE("truncation identity: phi(H) 1_{[-n,n]}(H) converges in norm") {
    // Semibounded setting: shift the spectrum into [0, span].
    auto r0 = random_symmetric(30, 13, 4.0);
    auto s0 = dense_eigendecomposition(r0);
    auto a = r0.shifted(-s0.eigenvalues[0]);
    auto s = dense_eigendecomposition(a);
    auto phi_h = functional_calculus(s, [](double t) { return std::exp(-t); }).to_dense();
    const double lam_max = s.eigenvalues[29];
    double prev = 1e300;
    for (double n : {1.0, 2.0, 4.0, 8.0, lam_max + 1.0}) {
        auto cut = spectral_projector(s, {-n, n}).to_dense();
        const double defect = (phi_h - phi_h * cut).norm();
        CHECK(defect <= prev * (1.0 + 1e-12) + 1e-12);
        prev = defect;
        if (n >= lam_max) CHECK(defect < 1e-10); // exact once the cutoff covers the spectrum
    }
}

TEST_CASE("spectral projectors") {
    auto a = diag_operator({1.0, 2.0, 3.0});
    auto s = dense_eigendecomposition(a);

    auto all = spectral_projector(s, {0.0, 10.0});
    CHECK((all.to_dense() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    auto none = spectral_projector(s, {4.0, 9.0});
    CHECK(none.to_dense().norm() < 1e-12);
    auto mid = spectral_projector(s, {1.5, 2.5});
    CHECK(mid.to_dense().trace() == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::MatrixXd p = mid.to_dense();
    CHECK((p * p - p).norm() < 1e-12);
    CHECK(mid.is_symmetric());

    CHECK(projector_boundary_ties(s, {1.0 + 5e-10, 2.5}).size() == 1);
    CHECK(projector_boundary_ties(s, {0.0, 10.0}).empty());
}

TEST_CASE("projector algebra and calculus homomorphism on random matrices") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
        auto r = random_symmetric(30, 1000 + trial);
        auto s = dense_eigendecomposition(r);
        const double lo = s.eigenvalues[0], hi = s.eigenvalues[29];

        Interval i1{uni(rng), uni(rng)}, i2{uni(rng), uni(rng)};
        if (i1.lo > i1.hi) std::swap(i1.lo, i1.hi);
        if (i2.lo > i2.hi) std::swap(i2.lo, i2.hi);
        Eigen::MatrixXd p1 = spectral_projector(s, i1).to_dense();
        Eigen::MatrixXd p2 = spectral_projector(s, i2).to_dense();
        Eigen::MatrixXd pi = spectral_projector(s, i1.intersect(i2)).to_dense();
        CHECK((p1 * p2 - pi).norm() < 1e-10);

        auto phi = [](double t) { return std::exp(-0.3 * t); };
        auto psi = [](double t) { return 1.0 / (1.0 + t * t); };
        Eigen::MatrixXd mphi = functional_calculus(s, phi).to_dense();
        Eigen::MatrixXd mpsi = functional_calculus(s, psi).to_dense();
        Eigen::MatrixXd mprod =
            functional_calculus(s, [&](double t) { return phi(t) * psi(t); }).to_dense();
        CHECK((mphi * mpsi - mprod).norm() < 1e-10);

        // Factorization identity behind relative compactness: for positive
        // phi, B 1_I(H) = B phi(H) (1_I / phi)(H).
        auto b = random_symmetric(30, 2000 + trial).to_dense();
        Interval cut{lo - 0.5, 0.5 * (lo + hi)};
        Eigen::MatrixXd lhs = b * spectral_projector(s, cut).to_dense();
        Eigen::MatrixXd rhs =
            b * mphi *
            functional_calculus(
                s, [&](double t) { return cut.contains(t) ? 1.0 / phi(t) : 0.0; })
                .to_dense();
        CHECK((lhs - rhs).norm() < 1e-10 * std::max(1.0, lhs.norm()));
    }
}

TEST_CASE("composition identity check") {
    auto a = diag_operator({1.0, 2.0, 3.0});
    auto s = dense_eigendecomposition(a);
    auto sq = [](double t) { return t * t; };
    auto chk = composition_identity_check(s, sq, {0.0, 5.0});
    CHECK(chk.defect < 1e-12);
    CHECK(chk.ties.empty());

    // Both routes give diag(1, 1, 0).
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(3, 3);
    expect(0, 0) = expect(1, 1) = 1.0;
    auto gh = functional_calculus(s, sq);
    auto sg = dense_eigendecomposition(gh);
    CHECK((spectral_projector(sg, {0.0, 5.0}).to_dense() - expect).norm() < 1e-12);

    auto ident = composition_identity_check(s, [](double t) { return t; }, {1.5, 9.0});
    CHECK(ident.defect < 1e-12);

    // Random matrices with g = exp, random intervals.
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> uni(0.0, 8.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        auto r = random_symmetric(30, 3000 + trial);
        auto sr = dense_eigendecomposition(r);
        for (int iv = 0; iv < 10; ++iv) {
            Interval i{uni(rng), uni(rng)};
            if (i.lo > i.hi) std::swap(i.lo, i.hi);
            auto c = composition_identity_check(sr, [](double t) { return std::exp(t); }, i);
            if (c.ties.empty()) worst = std::max(worst, c.defect);
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("singular value tails") {
    auto a = diag_operator({0.5, 1.0, 2.0, 4.0});
    auto s = dense_eigendecomposition(a);
    const double t = 0.7;
    // B = I: singular values are e^{-t lambda_j}, descending, so the k-th
    // one belongs to the k-th lowest eigenvalue.
    auto ident = functional_calculus(s, [](double) { return 1.0; });
    for (int k = 0; k < 4; ++k)
        CHECK(sv_tail(ident, s, [t](double x) { return std::exp(-t * x); }, k) ==
              doctest::Approx(std::exp(-t * s.eigenvalues[k])).epsilon(1e-10));
    // B = 0.
    auto zero = functional_calculus(s, [](double) { return 0.0; });
    CHECK(sv_tail(zero, s, [t](double x) { return std::exp(-t * x); }, 1) ==
          doctest::Approx(0.0));
    CHECK_THROWS_AS(sv_tail(ident, s, [](double) { return 1.0; }, 4),
                    std::invalid_argument);
}

TEST_CASE("sv tails over growing boxes: fixed window stays bounded") {
    // 1_E e^{-tH} for fixed E keeps its k-th singular value bounded as the
    // box grows; E = the whole box does not decay.
    const double t = 0.05;
    std::vector<double> fixed_tail, full_tail;
    for (double radius : {2.0, 3.0, 4.0}) {
        auto g = build_centered_grid(1, radius, 0.1);
        auto lap = assemble_dirichlet_laplacian(g);
        auto s = dense_eigendecomposition(lap);
        std::vector<std::int64_t> e_nodes;
        for (std::int64_t i = 0; i < g->total_nodes(); ++i)
            if (std::abs(g->coords(i)[0]) <= 1.0) e_nodes.push_back(i);
        fixed_tail.push_back(
            sv_tail(e_nodes, s, [t](double x) { return std::exp(-t * x); }, 5));
        std::vector<std::int64_t> all(g->total_nodes());
        for (std::int64_t i = 0; i < g->total_nodes(); ++i) all[i] = i;
        full_tail.push_back(
            sv_tail(all, s, [t](double x) { return std::exp(-t * x); }, 5));
    }
    CHECK(fixed_tail[2] <= 1.2 * fixed_tail[0] + 1e-12);
    CHECK(full_tail[2] > 2.0 * fixed_tail[2]);
}

TEST_CASE("hilbert-schmidt norm: volume at t = 0 and two agreeing routes") {
    auto g = grid_1d(-2.0, 2.0, 79);
    auto lap = assemble_dirichlet_laplacian(g);
    auto s = dense_eigendecomposition(lap);
    std::vector<std::int64_t> e_nodes;
    for (std::int64_t i = 0; i < g->total_nodes(); ++i)
        if (g->coords(i)[0] >= 0.0 && g->coords(i)[0] <= 1.0) e_nodes.push_back(i);

    const double vol = static_cast<double>(e_nodes.size()) * g->cell_measure();
    CHECK(hs_norm(e_nodes, s, 0.0) == doctest::Approx(std::sqrt(vol)).epsilon(1e-10));
    CHECK(hs_norm({}, s, 0.3) == doctest::Approx(0.0));

    for (double t : {0.05, 0.1, 0.5}) {
        const double direct = hs_norm(e_nodes, s, t);
        const double expansion = hs_norm_eigen_route(e_nodes, s, t);
        CHECK(direct == doctest::Approx(expansion).epsilon(1e-8));
    }
}

TEST_CASE("singular values interlace against the spectral cutoff") {
    // sigma_j(B e^{-tH}) <= ||e^{-tH} 1_{I^c}(H)|| ||B|| + sigma_j(B 1_I(H))
    // for cutoffs I = [gamma, n].
    const double t = 0.4;
    for (int trial = 0; trial < 5; ++trial) {
        auto r = random_symmetric(24, 500 + trial, 2.0);
        // Shift to gamma = 0.
        auto s0 = dense_eigendecomposition(r);
        auto a = r.shifted(-s0.eigenvalues[0]);
        auto s = dense_eigendecomposition(a);
        auto b = random_symmetric(24, 600 + trial).to_dense();
        const double bnorm = singular_values(b)[0];
        Eigen::MatrixXd beh =
            b * functional_calculus(s, [&](double x) { return std::exp(-t * x); }).to_dense();
        Eigen::VectorXd sv = singular_values(beh);
        for (double n : {0.5, 1.0, 2.0, 4.0}) {
            Interval cut{0.0, n};
            Eigen::MatrixXd b1i = b * spectral_projector(s, cut).to_dense();
            Eigen::VectorXd svc = singular_values(b1i);
            double offnorm = 0.0;
            for (int i = 0; i < 24; ++i)
                if (!cut.contains(s.eigenvalues[i]))
                    offnorm = std::max(offnorm, std::exp(-t * s.eigenvalues[i]));
            for (int j = 0; j < 24; ++j)
                CHECK(sv[j] <= offnorm * bnorm + svc[j] + 1e-10);
        }
    }
}

TEST_CASE("pencil top eigenvalue against an independent dense route") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(0.0, 3.0);
    for (int trial = 0; trial < 8; ++trial) {
        auto g = grid_1d(-1.0, 1.0, 35);
        auto lap = assemble_dirichlet_laplacian(g);
        std::vector<double> m(lap.dim());
        for (auto& v : m) v = uni(rng);
        const double c = 1.0 + uni(rng);
        const double q = pencil_max_eigenvalue(m, lap.shifted(c));

        // Oracle: eigenvalues of S^{-1/2} M S^{-1/2} via a dense square root.
        Eigen::MatrixXd s = lap.shifted(c).to_dense();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        Eigen::MatrixXd isqrt = es.operatorInverseSqrt();
        Eigen::MatrixXd md = Eigen::MatrixXd::Zero(lap.dim(), lap.dim());
        for (std::int64_t i = 0; i < lap.dim(); ++i) md(i, i) = m[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(isqrt * md * isqrt);
        CHECK(q == doctest::Approx(es2.eigenvalues()[lap.dim() - 1]).epsilon(1e-8));
    }

    // Not positive definite gets rejected.
    auto g = grid_1d(0.0, 1.0, 10);
    auto lap = assemble_dirichlet_laplacian(g);
    std::vector<double> m(lap.dim(), 1.0);
    CHECK_THROWS_AS(pencil_max_eigenvalue(m, lap.shifted(-1e6)), std::invalid_argument);
}
