#pragma once

#include "spectra/grid.hpp"
#include "spectra/grid_function.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spectra {

/// Nonnegative measure on the grid: an absolutely continuous part (density
/// per node, mass density*cell_measure per cell), point atoms, and a set of
/// nodes carrying infinite mass. Adding the measure to a form puts density
/// on the diagonal, weight/cell_measure for atoms, and removes the infinite
/// nodes from the form domain.
class DiscreteMeasure {
public:
    struct Atom {
        std::int64_t node = 0;
        double weight = 0.0;
    };

    DiscreteMeasure() = default;
    explicit DiscreteMeasure(GridPtr grid);
    DiscreteMeasure(GridPtr grid, std::vector<double> density, std::vector<Atom> atoms = {},
                    std::vector<std::int64_t> infinite_mask = {});

    static DiscreteMeasure zero(GridPtr grid) { return DiscreteMeasure(std::move(grid)); }
    static DiscreteMeasure lebesgue(GridPtr grid, double density = 1.0);
    static DiscreteMeasure from_density(GridPtr grid, const ScalarField& density);

    /// Atoms at the positions spacing*k (k integer, |spacing*k| < box radius)
    /// with weight weight(position); nodes are the nearest grid nodes.
    static DiscreteMeasure comb(GridPtr grid, double spacing, const ScalarField& weight);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const std::vector<double>& density() const { return density_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<std::int64_t>& infinite_mask() const { return infinite_mask_; }
    bool has_infinite() const { return !infinite_mask_.empty(); }

    void add_atom(std::int64_t node, double weight);
    void set_infinite(std::vector<std::int64_t> nodes);

    /// Diagonal of the induced form on operator vectors:
    /// density + atom_weight/cell_measure per node.
    std::vector<double> form_diagonal() const;

    /// Total mass of a node set; +inf when the set meets the infinite mask.
    double mass(const std::vector<std::int64_t>& nodes) const;
    /// Mass of the whole grid.
    double total_mass() const;

    std::string describe() const;

private:
    void validate() const;

    GridPtr grid_;
    std::vector<double> density_;
    std::vector<Atom> atoms_;
    std::vector<std::int64_t> infinite_mask_; // sorted
};

} // namespace spectra
