#include "doctest.h"

#include "spectra/assemble.hpp"
#include "spectra/eigsolve.hpp"
#include "spectra/errors.hpp"
#include "spectra/grid.hpp"
#include "spectra/grid_function.hpp"
#include "spectra/kernels.hpp"
#include "spectra/measure.hpp"

#include <cmath>
#include <random>

using namespace spectra;

namespace {

constexpr double pi = 3.14159265358979323846;

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

} // namespace

TEST_CASE("grid construction and index maps") {
    auto g = grid_1d(0.0, pi, 3);
    CHECK(g->spacing(0) == doctest::Approx(pi / 4.0).epsilon(1e-15));
    CHECK(g->total_nodes() == 3);
    CHECK(g->coords(0)[0] == doctest::Approx(pi / 4.0));

    auto g2 = grid_2d(0.0, 1.0, 10);
    CHECK(g2->total_nodes() == 100);
    CHECK(g2->cell_measure() == doctest::Approx(1.0 / (11.0 * 11.0)).epsilon(1e-15));
    // Index map round trip.
    for (std::int64_t node : {0L, 37L, 99L}) {
        auto mi = g2->multi_index(node);
        CHECK(g2->index(mi[0], mi[1]) == node);
    }

    Grid::Spec bad;
    bad.dim = 1;
    bad.lower = {0.0, 0.0};
    bad.upper = {0.0, 0.0};
    bad.nodes = {5, 1};
    CHECK_THROWS_AS(build_grid(bad), config_error);

    Grid::Spec big;
    big.dim = 2;
    big.lower = {0.0, 0.0};
    big.upper = {1.0, 1.0};
    big.nodes = {3000, 3000};
    CHECK_THROWS_AS(build_grid(big, 1'000'000), budget_error);
}

TEST_CASE("norm weighting: indicator of the box has the box volume") {
    auto g = grid_2d(-2.0, 2.0, 19);
    GridFunction one(g, 1.0);
    const double vol = g->total_nodes() * g->cell_measure();
    CHECK(one.norm_l2() * one.norm_l2() == doctest::Approx(vol).epsilon(1e-12));
    CHECK(one.norm_l1() == doctest::Approx(vol).epsilon(1e-12));
}

TEST_CASE("scalar field families") {
    auto g = grid_2d(-1.0, 1.0, 9);
    auto xsq = GridFunction::sample(
        g, ScalarField::poly({{1.0, {2, 0}}}));
    auto x2y2 = GridFunction::sample(g, ScalarField::poly({{1.0, {2, 2}}}));
    for (std::int64_t i = 0; i < g->total_nodes(); ++i) {
        const auto x = g->coords(i);
        CHECK(xsq[i] == doctest::Approx(x[0] * x[0]).epsilon(1e-14));
        CHECK(x2y2[i] == doctest::Approx(x[0] * x[0] * x[1] * x[1]).epsilon(1e-14));
    }
    Region outside;
    outside.kind = Region::Kind::outside_radius;
    outside.norm = Region::Norm::linf;
    outside.radius = 0.5;
    auto wall = GridFunction::sample(g, ScalarField::indicator(outside, plus_infinity()));
    CHECK(wall.has_infinite());
    for (std::int64_t i = 0; i < g->total_nodes(); ++i) {
        const auto x = g->coords(i);
        const bool out = std::max(std::abs(x[0]), std::abs(x[1])) > 0.5;
        CHECK(std::isinf(wall[i]) == out);
    }
}

TEST_CASE("discrete measure bookkeeping") {
    auto g = grid_1d(-5.0, 5.0, 99);
    auto leb = DiscreteMeasure::lebesgue(g);
    CHECK(leb.total_mass() == doctest::Approx(99.0 * g->cell_measure()));

    DiscreteMeasure m(g);
    m.add_atom(10, 2.5);
    CHECK_THROWS_AS(m.add_atom(10, 1.0), config_error);
    CHECK(m.mass({9, 10, 11}) == doctest::Approx(2.5));
    m.set_infinite({50});
    CHECK(std::isinf(m.mass({50})));
    CHECK(std::isinf(m.total_mass()));

    // Comb with |k| weights: atom at k=0 is dropped (weight zero).
    auto comb = DiscreteMeasure::comb(g, 1.0, ScalarField::abs_power(1.0, 1.0));
    double expected = 0.0;
    for (int k = -4; k <= 4; ++k) expected += std::abs(k);
    CHECK(comb.total_mass() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(comb.atoms().size() == 8);
}

TEST_CASE("dirichlet laplacian closed-form spectrum in 1d") {
    const std::int64_t n = 50;
    auto g = grid_1d(0.0, 1.0, n);
    auto lap = assemble_dirichlet_laplacian(g);
    CHECK(lap.is_symmetric());
    CHECK(lap.is_tridiagonal());
    CHECK(lap.gamma().value() == 0.0);

    auto s = dense_eigendecomposition(lap);
    const double h = g->spacing(0);
    for (std::int64_t k = 1; k <= n; ++k) {
        const double sk = std::sin(k * pi / (2.0 * (n + 1)));
        const double expected = 4.0 / (h * h) * sk * sk;
        CHECK(s.eigenvalues[k - 1] == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("1d laplacian converges to the continuum ground state at rate h^2") {
    // (0, pi): continuum eigenvalues k^2.
    double err_prev = 0.0;
    for (std::int64_t n : {40, 80}) {
        auto g = grid_1d(0.0, pi, n);
        auto lap = assemble_dirichlet_laplacian(g);
        auto s = lowest_eigenpairs(lap, 1, 1e-9);
        const double err = std::abs(s.eigenvalues[0] - 1.0);
        if (err_prev > 0.0) {
            const double rate = err_prev / err;
            CHECK(rate > 3.0); // doubling n quarters the error
            CHECK(rate < 5.0);
        }
        err_prev = err;
    }
}

TEST_CASE("dirichlet boundary shows in the form of the constant function") {
    auto g = grid_2d(0.0, 1.0, 8);
    auto lap = assemble_dirichlet_laplacian(g);
    GridFunction one(g, 1.0);
    CHECK(quadratic_form(lap, one) > 0.0);
}

TEST_CASE("schrodinger assembly: identity case and mask semantics") {
    auto g = grid_1d(-2.0, 2.0, 79);
    auto lap = assemble_dirichlet_laplacian(g);

    GridFunction zero(g);
    auto same = assemble_schrodinger(lap, zero, zero);
    REQUIRE(same.dim() == lap.dim());
    for (std::int64_t i = 0; i < same.dim(); ++i)
        for (std::int64_t j = std::max<std::int64_t>(0, i - 1); j <= std::min(same.dim() - 1, i + 1); ++j)
            CHECK(same.coeff(i, j) == lap.coeff(i, j));
    CHECK(same.klmn().value().q == 0.0);

    // V+ = inf on the closed region {|x| >= 1} removes those nodes; what
    // remains is exactly the Dirichlet Laplacian of the box with walls at
    // +-1 (the lattice realization of the form-domain restriction).
    Region outside;
    outside.kind = Region::Kind::outside_radius;
    outside.radius = 1.0 - 0.5 * g->spacing(0);
    auto wall = GridFunction::sample(g, ScalarField::indicator(outside, plus_infinity()));
    auto masked = assemble_schrodinger(lap, wall, zero);
    for (auto node : masked.active_nodes())
        CHECK(std::abs(g->coords(node)[0]) < 1.0);
    auto inner = build_centered_grid(1, 1.0, g->spacing(0));
    auto inner_lap = assemble_dirichlet_laplacian(inner);
    REQUIRE(masked.dim() == inner_lap.dim());
    for (std::int64_t i = 0; i < masked.dim(); ++i)
        for (std::int64_t j = 0; j < masked.dim(); ++j)
            CHECK(masked.coeff(i, j) == inner_lap.coeff(i, j));

    GridFunction neg(g, -1.0);
    CHECK_THROWS_AS(assemble_schrodinger(lap, neg, zero), std::invalid_argument);
}

TEST_CASE("harmonic oscillator eigenvalues 2k+1") {
    // h = 0.01 keeps the discretization error near 1e-4 for the fifth level.
    auto g = grid_1d(-10.0, 10.0, 1999);
    auto lap = assemble_dirichlet_laplacian(g);
    auto vplus = GridFunction::sample(g, ScalarField::poly({{1.0, {2, 0}}}));
    auto h = assemble_schrodinger(lap, vplus, GridFunction(g));
    auto s = lowest_eigenpairs(h, 5, 1e-8);
    for (int k = 0; k < 5; ++k)
        CHECK(s.eigenvalues[k] == doctest::Approx(2.0 * k + 1.0).epsilon(1e-3));

    // Dense oracle at a coarser resolution agrees with the iterative path.
    auto gc = grid_1d(-10.0, 10.0, 799);
    auto lapc = assemble_dirichlet_laplacian(gc);
    auto hc = assemble_schrodinger(
        lapc, GridFunction::sample(gc, ScalarField::poly({{1.0, {2, 0}}})), GridFunction(gc));
    auto dense = dense_eigendecomposition(hc);
    auto iter = lowest_eigenpairs(hc, 5, 1e-9);
    for (int k = 0; k < 5; ++k)
        CHECK(iter.eigenvalues[k] == doctest::Approx(dense.eigenvalues[k]).epsilon(1e-8));
}

TEST_CASE("measure perturbations: shift, atoms, infinity mask") {
    auto g = grid_1d(-3.0, 3.0, 59);
    auto lap = assemble_dirichlet_laplacian(g);

    // Lebesgue density c shifts the matrix by exactly c on the diagonal.
    const double c = 0.7;
    auto shifted = add_measure(lap, DiscreteMeasure::lebesgue(g, c), DiscreteMeasure::zero(g));
    for (std::int64_t i = 0; i < lap.dim(); ++i) {
        CHECK(shifted.coeff(i, i) == lap.coeff(i, i) + c);
        if (i + 1 < lap.dim()) CHECK(shifted.coeff(i, i + 1) == lap.coeff(i, i + 1));
    }
    auto s0 = dense_eigendecomposition(lap);
    auto s1 = dense_eigendecomposition(shifted);
    for (std::int64_t k = 0; k < lap.dim(); ++k)
        CHECK(s1.eigenvalues[k] - s0.eigenvalues[k] == doctest::Approx(c).epsilon(1e-12));

    // A single atom adds weight / cell_measure to one diagonal entry.
    DiscreteMeasure atom(g);
    atom.add_atom(30, 2.0);
    auto pert = add_measure(lap, atom, DiscreteMeasure::zero(g));
    const std::int64_t row = pert.row_of_node(30);
    CHECK(pert.coeff(row, row) ==
          doctest::Approx(lap.coeff(row, row) + 2.0 / g->cell_measure()).epsilon(1e-15));

    // infinity_B outside [-1, 1] equals the V+ = inf wall.
    DiscreteMeasure inf_b(g);
    std::vector<std::int64_t> mask;
    for (std::int64_t i = 0; i < g->total_nodes(); ++i)
        if (std::abs(g->coords(i)[0]) > 1.0) mask.push_back(i);
    inf_b.set_infinite(mask);
    auto via_measure = add_measure(lap, inf_b, DiscreteMeasure::zero(g));
    Region outside;
    outside.kind = Region::Kind::outside_radius;
    outside.radius = 1.0;
    auto via_potential = assemble_schrodinger(
        lap, GridFunction::sample(g, ScalarField::indicator(outside, plus_infinity())),
        GridFunction(g));
    REQUIRE(via_measure.dim() == via_potential.dim());
    for (std::int64_t i = 0; i < via_measure.dim(); ++i)
        for (std::int64_t j = 0; j < via_measure.dim(); ++j)
            CHECK(via_measure.coeff(i, j) == via_potential.coeff(i, j));

    // Atom inside the infinite mask has nowhere to live.
    DiscreteMeasure broken(g);
    broken.add_atom(0, 1.0);
    broken.set_infinite({0});
    CHECK_THROWS_AS(add_measure(lap, broken, DiscreteMeasure::zero(g)),
                    std::invalid_argument);
}

TEST_CASE("klmn gate accepts small negative parts and rejects q >= 1") {
    auto g = grid_1d(-10.0, 10.0, 199);
    auto lap = assemble_dirichlet_laplacian(g);
    auto vp = GridFunction::sample(g, ScalarField::poly({{1.0, {2, 0}}}));

    // V- = V+/2 is form small with q <= 1/2 at C = 0.
    GridFunction vm(g);
    for (std::int64_t i = 0; i < vm.size(); ++i) vm[i] = 0.5 * vp[i];
    auto ok = assemble_schrodinger(lap, vp, vm);
    CHECK(ok.klmn().value().q < 1.0);

    // V- = 2 V+ cannot satisfy the bound at C = 0.
    GridFunction vbad(g);
    for (std::int64_t i = 0; i < vbad.size(); ++i) vbad[i] = 2.0 * vp[i];
    CHECK_THROWS_AS(
        assemble_schrodinger(lap, vp, vbad, KlmnPolicy::fixed_bound(0.9, 0.0)),
        klmn_error);
}

TEST_CASE("mask monotonicity raises every retained eigenvalue") {
    auto g = grid_2d(-1.0, 1.0, 12);
    auto lap = assemble_dirichlet_laplacian(g);
    Region outside;
    outside.kind = Region::Kind::outside_radius;
    outside.norm = Region::Norm::l2;
    outside.radius = 0.7;
    auto wall = GridFunction::sample(g, ScalarField::indicator(outside, plus_infinity()));
    auto masked = assemble_schrodinger(lap, wall, GridFunction(g));
    REQUIRE(masked.dim() < lap.dim());
    auto sm = dense_eigendecomposition(masked);
    auto s0 = dense_eigendecomposition(lap);
    for (std::int64_t k = 0; k < masked.dim(); ++k)
        CHECK(sm.eigenvalues[k] >= s0.eigenvalues[k] - 1e-10);
}

TEST_CASE("quadratic form conventions") {
    auto g = grid_1d(0.0, 1.0, 30);
    auto lap = assemble_dirichlet_laplacian(g);
    auto s = dense_eigendecomposition(lap);

    // Weighted-unit eigenvector gives its eigenvalue.
    Eigen::VectorXd v = s.vectors.col(3);
    CHECK(quadratic_form(lap, v) == doctest::Approx(s.eigenvalues[3]).epsilon(1e-10));

    GridFunction zero(g);
    CHECK(quadratic_form(lap, zero) == 0.0);

    // h[u] >= gamma ||u||^2 with gamma = 0.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd u(lap.dim());
    for (auto& x : u) x = gauss(rng);
    CHECK(quadratic_form(lap, u) >= 0.0);

    GridFunction wrong(grid_1d(0.0, 1.0, 31));
    CHECK_THROWS_AS(quadratic_form(lap, wrong), std::invalid_argument);
}

TEST_CASE("parallel kernels match the serial reference bitwise") {
    auto g = grid_2d(-1.0, 1.0, 23);
    auto lap = assemble_dirichlet_laplacian(g);
    const std::int64_t n = lap.dim();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd x(n), y1(n), y2(n);
    for (auto& v : x) v = gauss(rng);

    kernels::spmv_serial(lap.csr(), x.data(), y1.data());
    kernels::spmv_omp(lap.csr(), x.data(), y2.data());
    for (std::int64_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);

    const std::int64_t m = 17;
    std::vector<double> basis(static_cast<std::size_t>(n) * m);
    for (auto& v : basis) v = gauss(rng);
    Eigen::VectorXd w(n);
    for (auto& v : w) v = gauss(rng);
    Eigen::VectorXd c1(m), c2(m);
    kernels::gemv_t_serial(basis.data(), n, m, w.data(), c1.data());
    kernels::gemv_t_omp(basis.data(), n, m, w.data(), c2.data());
    for (std::int64_t j = 0; j < m; ++j) CHECK(c1[j] == c2[j]);

    Eigen::VectorXd w1 = w, w2 = w;
    kernels::gemv_sub_serial(basis.data(), n, m, c1.data(), w1.data());
    kernels::gemv_sub_omp(basis.data(), n, m, c1.data(), w2.data());
    for (std::int64_t i = 0; i < n; ++i) CHECK(w1[i] == w2[i]);

    std::vector<std::int32_t> bucket(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < bucket.size(); ++i)
        bucket[i] = static_cast<std::int32_t>(i % 13);
    std::vector<double> s1(13), s2(13);
    std::vector<double> xv(x.data(), x.data() + n);
    kernels::bucket_sumsq_serial(xv, bucket, s1);
    kernels::bucket_sumsq_omp(xv, bucket, s2);
    for (int b = 0; b < 13; ++b) CHECK(s1[b] == s2[b]);
}
