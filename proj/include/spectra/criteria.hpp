#pragma once

#include "spectra/assemble.hpp"
#include "spectra/eigsolve.hpp"
#include "spectra/grid_function.hpp"
#include "spectra/measure.hpp"
#include "spectra/operator.hpp"

#include <array>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace spectra {

using NodeSet = std::vector<std::int64_t>; // sorted grid node ids

/// {i : V(i) <= n}; +inf nodes never qualify. Throws on NaN entries.
NodeSet sublevel_set(const GridFunction& v, double n);

/// Cube-wise L2 profile over the lattice of side-s cubes centered at s*k,
/// k integer. sup_norm is the l^inf(L2) size; the tail map is the
/// thin-at-infinity diagnostic.
struct CubeProfile {
    struct Entry {
        std::array<std::int64_t, 2> k{0, 0};
        double norm = 0.0;
    };
    std::vector<Entry> per_cube;
    double sup_norm = 0.0;
    double rounding_defect = 0.0; // |side - round(side/h) h|, worst axis
    std::vector<std::pair<double, double>> tail; // (rho, sup over |k| >= rho)

    /// sup of cube norms over cubes with |k|_2 >= rho.
    double tail_sup(double rho) const;
};
CubeProfile cube_profile(const GridFunction& f, double cube_side);

/// ||diag(h) (A+1)^{-p}||_op / ||h||_{2;inf} for the Laplacian A. The
/// fractional power runs through a full decomposition (pass one in to share
/// it across weights).
double strichartz_ratio(const GridFunction& hfun, const SymmetricOperator& laplacian, double p,
                        const SpectralData* precomputed = nullptr);

/// Window masses mu([x, x+window]) on the 1D stride lattice.
struct MolchanovProfile {
    double window = 0.0;
    double stride = 0.0;
    std::vector<std::pair<double, double>> profile; // (window left endpoint x, mass)

    /// min of mass over windows with |x| >= rho; the divergence diagnostic.
    double min_tail(double rho) const;
};
MolchanovProfile molchanov_scan(const DiscreteMeasure& mu, double window, double stride);

/// Ball integrals of (V1 + C)^{-1} on a scan lattice; +inf nodes contribute
/// zero to the integrand.
struct BenciProfile {
    double ball_radius = 1.0;
    std::vector<std::pair<std::array<double, 2>, double>> profile; // (center, integral)

    double sup_tail(double rho) const;
};
BenciProfile benci_fortunato_scan(const GridFunction& v1, double c, double ball_radius = 1.0,
                                  double stride = 0.0 /* 0: automatic */);

/// Best q with (minus form)[u] <= q (base form)[u] + q C ||u||^2, the top
/// generalized eigenvalue of the pencil against base + C.
double form_bound_estimate(const GridFunction& vminus, const SymmetricOperator& base, double c);
double form_bound_estimate(const DiscreteMeasure& mu_minus, const SymmetricOperator& base,
                           double c);

/// (1-q)(gamma+s) - C_q, the lower edge certified for the essential
/// spectrum. Requires 0 <= q < 1.
double thm_main1_threshold(double q, double cq, double gamma, double s);

struct CapacityResult {
    double cap = 0.0;
    GridFunction minimizer;
    bool kkt_ok = false;
    int iterations = 0;
};

/// Cap(U) = min phi^T (A+1) phi (cell weighted) over phi >= 1 on U. Solves
/// the equality-pinned system first and falls back to active-set iteration
/// when a multiplier comes out negative.
CapacityResult capacity(const NodeSet& u, const SymmetricOperator& a,
                        int max_iterations = 60);

struct AvResult {
    double lambda = 0.0;
    NodeSet region;
    double dual_lower = 0.0;   // +inf when the feasible set is empty
    double primal_upper = 0.0; // +inf when no feasible witness was found
    std::optional<GridFunction> witness;
    double beta_star = 0.0;
};

/// Av^lambda_G(mu) = inf { mu[u,u] : ||u|| = 1, E[u] <= lambda, supp u in G }
/// bounded from below by the concave dual  max_beta lambda_min(M + beta A) -
/// beta lambda  and from above by the eigenvector witness at the optimal
/// multiplier (with an exact two-mode feasibility repair).
AvResult av_lambda(const DiscreteMeasure& mu, const NodeSet& g, double lambda,
                   const SymmetricOperator& a0);

/// min over unit u supported off K of ||(A - lambda)u||: the square root of
/// the bottom of the compression of (A-lambda)^2 to the complement of K.
double weyl_residual(const SymmetricOperator& a, double lambda, const NodeSet& k);

/// Shared recipe for one operator family over growing centered boxes:
/// Dirichlet Laplacian plus potentials and measures from named fields.
struct OperatorSpec {
    ScalarField vplus = ScalarField::zero_field();
    ScalarField vminus = ScalarField::zero_field();
    ScalarField mu_plus_density = ScalarField::zero_field();
    ScalarField mu_minus_density = ScalarField::zero_field();
    struct Comb {
        double spacing = 1.0;
        ScalarField weight;
    };
    std::optional<Comb> comb; // atoms of mu+ at multiples of spacing
    std::optional<Region> infinite_region; // infinity mask of mu+
    KlmnPolicy klmn = KlmnPolicy::automatic();

    bool has_measure() const;
    DiscreteMeasure build_mu_plus(const GridPtr& grid) const;
    DiscreteMeasure build_mu_minus(const GridPtr& grid) const;
    SymmetricOperator assemble(const GridPtr& grid) const;
    std::string describe() const;
};

/// One operator per truncation radius, all sharing the spacing and the
/// potential/measure recipe. Operators materialize lazily, once each.
class TruncationFamily {
public:
    TruncationFamily(int dim, double h, std::vector<double> radii, OperatorSpec spec,
                     std::int64_t node_budget = default_node_budget);

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    std::int64_t size() const { return static_cast<std::int64_t>(radii_.size()); }
    double radius(std::int64_t i) const { return radii_[i]; }
    const std::vector<double>& radii() const { return radii_; }
    const OperatorSpec& spec() const { return spec_; }
    const SymmetricOperator& op(std::int64_t i) const;

private:
    int dim_;
    double h_;
    std::vector<double> radii_;
    OperatorSpec spec_;
    std::int64_t node_budget_;
    mutable std::mutex mutex_;
    mutable std::vector<std::unique_ptr<SymmetricOperator>> slots_;
};

enum class ProbeClass { discrete_below, essential_suspected, inconclusive };

const char* to_string(ProbeClass c);

struct ProbeVerdict {
    double threshold = 0.0;
    std::vector<std::int64_t> counts;  // one per radius
    std::vector<double> eigenvalues;   // at the largest radius, when computed
    std::vector<bool> cauchy_flags;    // per-eigenvalue movement under the tol
    ProbeClass classification = ProbeClass::inconclusive;
    std::string note;
};

/// Counting functions N_j(lambda) over the truncation family, with the
/// stabilization heuristic: equal counts over the last three radii and
/// Cauchy eigenvalues mean discrete-below-lambda, strictly increasing counts
/// mean essential-suspected, anything else is inconclusive.
std::vector<ProbeVerdict> ess_spectrum_probe(const TruncationFamily& family,
                                             const std::vector<double>& lambda_grid,
                                             double cauchy_rel_tol = 1e-4);

} // namespace spectra
