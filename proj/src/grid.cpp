#include "spectra/grid.hpp"

#include "spectra/errors.hpp"

#include <cmath>
#include <string>

namespace spectra {

bool Grid::same_layout(const Grid& other) const {
    if (dim_ != other.dim_ || total_ != other.total_) return false;
    for (int a = 0; a < dim_; ++a) {
        if (lower_[a] != other.lower_[a] || upper_[a] != other.upper_[a] ||
            nodes_[a] != other.nodes_[a])
            return false;
    }
    return true;
}

GridPtr build_grid(const Grid::Spec& spec, std::int64_t node_budget) {
    if (spec.dim < 1 || spec.dim > Grid::max_dim)
        throw config_error("grid.dim must be 1 or 2, got " + std::to_string(spec.dim));

    auto g = std::make_shared<Grid>();
    g->dim_ = spec.dim;
    g->total_ = 1;
    g->cell_measure_ = 1.0;
    for (int a = 0; a < spec.dim; ++a) {
        const double extent = spec.upper[a] - spec.lower[a];
        if (!(extent > 0.0))
            throw config_error("grid axis " + std::to_string(a) + " has nonpositive extent " +
                               std::to_string(extent));
        if (spec.nodes[a] < 2)
            throw config_error("grid axis " + std::to_string(a) +
                               " needs at least 2 interior nodes");
        g->lower_[a] = spec.lower[a];
        g->upper_[a] = spec.upper[a];
        g->nodes_[a] = spec.nodes[a];
        g->spacing_[a] = extent / static_cast<double>(spec.nodes[a] + 1);
        if (!(g->spacing_[a] > 0.0))
            throw config_error("grid axis " + std::to_string(a) + " spacing underflowed");
        g->total_ *= spec.nodes[a];
        g->cell_measure_ *= g->spacing_[a];
    }
    if (g->total_ > node_budget)
        throw budget_error("grid has " + std::to_string(g->total_) +
                           " nodes, over the budget of " + std::to_string(node_budget));
    return g;
}

GridPtr build_centered_grid(int dim, double radius, double h, std::int64_t node_budget) {
    if (!(radius > 0.0)) throw config_error("radius must be positive");
    if (!(h > 0.0)) throw config_error("spacing must be positive");
    const double steps = 2.0 * radius / h;
    const auto n_cells = static_cast<std::int64_t>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(n_cells)) > 1e-6 || n_cells < 3)
        throw config_error("2*radius = " + std::to_string(2.0 * radius) +
                           " is not an integer multiple of spacing " + std::to_string(h));
    Grid::Spec spec;
    spec.dim = dim;
    for (int a = 0; a < dim; ++a) {
        spec.lower[a] = -radius;
        spec.upper[a] = radius;
        spec.nodes[a] = n_cells - 1;
    }
    return build_grid(spec, node_budget);
}

} // namespace spectra
