#include "spectra/assemble.hpp"

#include "spectra/eigsolve.hpp"
#include "spectra/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spectra {

SymmetricOperator assemble_dirichlet_laplacian(const GridPtr& grid) {
    const std::int64_t n = grid->total_nodes();
    std::vector<std::int64_t> active(n);
    for (std::int64_t i = 0; i < n; ++i) active[i] = i;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * (grid->dim() + 1));
    const std::int64_t nx = grid->nodes(0);
    const std::int64_t ny = grid->dim() == 2 ? grid->nodes(1) : 1;
    const double ihx2 = 1.0 / (grid->spacing(0) * grid->spacing(0));
    const double ihy2 = grid->dim() == 2 ? 1.0 / (grid->spacing(1) * grid->spacing(1)) : 0.0;
    const double diag = 2.0 * ihx2 + (grid->dim() == 2 ? 2.0 * ihy2 : 0.0);

    for (std::int64_t iy = 0; iy < ny; ++iy) {
        for (std::int64_t ix = 0; ix < nx; ++ix) {
            const std::int64_t i = grid->index(ix, iy);
            trips.emplace_back(i, i, diag);
            if (ix + 1 < nx) trips.emplace_back(i, grid->index(ix + 1, iy), -ihx2);
            if (iy + 1 < ny) trips.emplace_back(i, grid->index(ix, iy + 1), -ihy2);
        }
    }
    auto op = SymmetricOperator::from_triplets(grid, std::move(active), trips);
    op.set_gamma(0.0);
    return op;
}

namespace {

constexpr double klmn_scan_top = 65536.0;

// Smallest admissible constant on the geometric ladder {0, 1, 2, ..., 2^16}.
KlmnBound resolve_klmn(const std::vector<double>& minus_diag, const SymmetricOperator& base,
                       const KlmnPolicy& policy) {
    bool vanishes = true;
    for (double v : minus_diag) {
        if (v < 0.0 || std::isnan(v))
            throw std::invalid_argument("negative part must be a nonnegative function");
        vanishes = vanishes && (v == 0.0);
    }
    if (vanishes) return {0.0, 0.0};

    if (policy.mode == KlmnPolicy::Mode::fixed) {
        if (policy.q >= 1.0)
            throw klmn_error("declared form bound q = " + std::to_string(policy.q) +
                             " is not below 1");
        if (policy.q < 0.0 || policy.cq < 0.0)
            throw klmn_error("declared form bound must be nonnegative");
        if (policy.q == 0.0) {
            const double top = *std::max_element(minus_diag.begin(), minus_diag.end());
            if (top > policy.cq * (1.0 + 1e-12))
                throw klmn_error("bound q = 0 requires C_q >= max of the negative part (" +
                                 std::to_string(top) + ")");
            return {0.0, policy.cq};
        }
        // minus <= q*base + cq  iff the pencil against q*base + cq stays <= 1.
        SymmetricOperator s = base.scaled(policy.q).shifted(policy.cq);
        double viol;
        try {
            viol = pencil_max_eigenvalue(minus_diag, s);
        } catch (const std::invalid_argument&) {
            throw klmn_error("q*base + C_q is not positive definite at the declared bound");
        }
        if (viol > 1.0 + 1e-10) {
            std::ostringstream os;
            os << "form bound violated: (minus form) reaches " << viol
               << " times (q*base + C_q)";
            throw klmn_error(os.str());
        }
        return {policy.q, policy.cq};
    }

    for (double c = 0.0; c <= klmn_scan_top; c = (c == 0.0 ? 1.0 : 2.0 * c)) {
        double q;
        try {
            q = pencil_max_eigenvalue(minus_diag, base.shifted(c));
        } catch (const std::invalid_argument&) {
            continue; // base + C not yet positive definite
        }
        if (q < 1.0 - 1e-12) return {q, q * c};
    }
    throw klmn_error("negative part is not form bounded with bound < 1 for any C in the "
                     "scanned ladder (up to 65536)");
}

std::vector<std::int64_t> surviving_rows(const SymmetricOperator& h0,
                                         const std::vector<std::int64_t>& removed_nodes) {
    std::vector<std::int64_t> rows;
    const auto& active = h0.active_nodes();
    rows.reserve(active.size());
    for (std::int64_t r = 0; r < h0.dim(); ++r)
        if (!std::binary_search(removed_nodes.begin(), removed_nodes.end(), active[r]))
            rows.push_back(r);
    return rows;
}

} // namespace

SymmetricOperator assemble_schrodinger(const SymmetricOperator& h0, const GridFunction& vplus,
                                       const GridFunction& vminus, KlmnPolicy policy) {
    if (!h0.grid().same_layout(vplus.grid()) || !h0.grid().same_layout(vminus.grid()))
        throw std::invalid_argument("potential lives on a different grid");
    for (std::int64_t i = 0; i < vplus.size(); ++i) {
        const double v = vplus[i];
        if (std::isnan(v) || v < 0.0)
            throw std::invalid_argument("V+ must be nonnegative (infinity allowed)");
    }
    for (std::int64_t i = 0; i < vminus.size(); ++i) {
        const double v = vminus[i];
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("V- must be nonnegative and finite");
    }

    std::vector<std::int64_t> removed = vplus.infinite_nodes();
    std::sort(removed.begin(), removed.end());
    SymmetricOperator base = h0.restrict_rows(surviving_rows(h0, removed));

    std::vector<double> vp(base.dim()), vm(base.dim());
    for (std::int64_t r = 0; r < base.dim(); ++r) {
        vp[r] = vplus[base.active_nodes()[r]];
        vm[r] = vminus[base.active_nodes()[r]];
    }
    const auto gamma0 = h0.gamma();
    base = base.with_added_diagonal(vp);
    base.set_gamma(gamma0); // V+ >= 0 only raises the form

    const KlmnBound bound = resolve_klmn(vm, base, policy);
    SymmetricOperator out = base.with_added_diagonal([&] {
        std::vector<double> neg(vm.size());
        for (std::size_t i = 0; i < vm.size(); ++i) neg[i] = -vm[i];
        return neg;
    }());
    if (gamma0) out.set_gamma((1.0 - bound.q) * *gamma0 - bound.cq);
    out.set_klmn(bound);
    return out;
}

SymmetricOperator add_measure(const SymmetricOperator& h0, const DiscreteMeasure& mu_plus,
                              const DiscreteMeasure& mu_minus, KlmnPolicy policy) {
    if (!h0.grid().same_layout(mu_plus.grid()) || !h0.grid().same_layout(mu_minus.grid()))
        throw std::invalid_argument("measure lives on a different grid");
    if (mu_minus.has_infinite())
        throw std::invalid_argument("mu- must not carry an infinite part");

    std::vector<std::int64_t> removed = mu_plus.infinite_mask();
    SymmetricOperator base = h0.restrict_rows(surviving_rows(h0, removed));

    auto check_atoms = [&](const DiscreteMeasure& mu) {
        for (const auto& a : mu.atoms())
            if (base.row_of_node(a.node) < 0)
                throw std::invalid_argument("atom placed on an inactive node " +
                                            std::to_string(a.node));
    };
    check_atoms(mu_plus);
    check_atoms(mu_minus);

    const auto dplus_full = mu_plus.form_diagonal();
    const auto dminus_full = mu_minus.form_diagonal();
    std::vector<double> dp(base.dim()), dm(base.dim());
    for (std::int64_t r = 0; r < base.dim(); ++r) {
        dp[r] = dplus_full[base.active_nodes()[r]];
        dm[r] = dminus_full[base.active_nodes()[r]];
    }
    const auto gamma0 = h0.gamma();
    base = base.with_added_diagonal(dp);
    base.set_gamma(gamma0);

    const KlmnBound bound = resolve_klmn(dm, base, policy);
    SymmetricOperator out = base.with_added_diagonal([&] {
        std::vector<double> neg(dm.size());
        for (std::size_t i = 0; i < dm.size(); ++i) neg[i] = -dm[i];
        return neg;
    }());
    if (gamma0) out.set_gamma((1.0 - bound.q) * *gamma0 - bound.cq);
    out.set_klmn(bound);
    return out;
}

} // namespace spectra
