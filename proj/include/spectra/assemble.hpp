#pragma once

#include "spectra/grid.hpp"
#include "spectra/grid_function.hpp"
#include "spectra/measure.hpp"
#include "spectra/operator.hpp"

namespace spectra {

/// How to obtain the KLMN constants for a negative perturbation.
/// auto_scan sweeps C over the geometric ladder {0, 1, 2, 4, ..., 2^16} and
/// takes the first C with relative bound q(C) < 1; fixed asserts a given
/// (q, C_q) pair and fails when the pencil shows it does not hold.
struct KlmnPolicy {
    enum class Mode { auto_scan, fixed };
    Mode mode = Mode::auto_scan;
    double q = 0.0;
    double cq = 0.0;

    static KlmnPolicy automatic() { return {}; }
    static KlmnPolicy fixed_bound(double q, double cq) {
        return {Mode::fixed, q, cq};
    }
};

/// Second-order 3/5-point Dirichlet Laplacian on the grid. The quadratic
/// form is sum over edges of (u_i - u_j)^2 * h^(d-2), eigenvalues converge
/// to the continuum Dirichlet spectrum as h -> 0. Lower bound metadata 0.
SymmetricOperator assemble_dirichlet_laplacian(const GridPtr& grid);

/// H0 + V+ - V- as a form sum. Nodes with V+ = +inf leave the active mask.
/// V- must be form small w.r.t. H0 + V+ per the policy; the bound used is
/// recorded on the result. Throws klmn_error when no admissible bound exists.
SymmetricOperator assemble_schrodinger(const SymmetricOperator& h0, const GridFunction& vplus,
                                       const GridFunction& vminus,
                                       KlmnPolicy policy = KlmnPolicy::automatic());

/// H0 + mu+ - mu- as a form sum. Infinite-mask nodes of mu+ leave the mask;
/// densities add to the diagonal as-is, an atom of weight w at node i adds
/// w / cell_measure to the diagonal. mu- must have no infinite part.
SymmetricOperator add_measure(const SymmetricOperator& h0, const DiscreteMeasure& mu_plus,
                              const DiscreteMeasure& mu_minus,
                              KlmnPolicy policy = KlmnPolicy::automatic());

} // namespace spectra
