#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace spectra {

/// Rectangular lattice of interior nodes of a box in one or two dimensions,
/// with Dirichlet boundary implied on the box walls. Node i along an axis
/// with n interior nodes and spacing h = (upper-lower)/(n+1) sits at
/// lower + (i+1)h. The cell measure (h in 1D, hx*hy in 2D) weights every
/// L^p norm and inner product in the library.
class Grid {
public:
    static constexpr int max_dim = 2;

    struct Spec {
        int dim = 1;
        std::array<double, max_dim> lower{0.0, 0.0};
        std::array<double, max_dim> upper{1.0, 1.0};
        std::array<std::int64_t, max_dim> nodes{1, 1}; // interior nodes per axis
    };

    int dim() const { return dim_; }
    double lower(int axis) const { return lower_[axis]; }
    double upper(int axis) const { return upper_[axis]; }
    std::int64_t nodes(int axis) const { return nodes_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    std::int64_t total_nodes() const { return total_; }
    double cell_measure() const { return cell_measure_; }

    /// Linear index from per-axis indices (x fastest).
    std::int64_t index(std::int64_t ix, std::int64_t iy = 0) const {
        return ix + nodes_[0] * iy;
    }
    std::array<std::int64_t, max_dim> multi_index(std::int64_t node) const {
        if (dim_ == 1) return {node, 0};
        return {node % nodes_[0], node / nodes_[0]};
    }
    /// Physical coordinates of a node.
    std::array<double, max_dim> coords(std::int64_t node) const {
        auto mi = multi_index(node);
        std::array<double, max_dim> x{0.0, 0.0};
        for (int a = 0; a < dim_; ++a) x[a] = lower_[a] + (mi[a] + 1) * spacing_[a];
        return x;
    }

    bool same_layout(const Grid& other) const;

private:
    friend std::shared_ptr<const Grid> build_grid(const Spec&, std::int64_t);

    int dim_ = 1;
    std::array<double, max_dim> lower_{};
    std::array<double, max_dim> upper_{};
    std::array<std::int64_t, max_dim> nodes_{};
    std::array<double, max_dim> spacing_{};
    std::int64_t total_ = 0;
    double cell_measure_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

inline constexpr std::int64_t default_node_budget = 4'000'000;

/// Validates the box and resolution and returns an immutable grid.
/// Throws config_error on a degenerate box, resolution < 2 per axis, or a
/// total node count above the budget.
GridPtr build_grid(const Grid::Spec& spec, std::int64_t node_budget = default_node_budget);

/// Convenience: centered box (-radius, radius)^dim with spacing h.
/// 2*radius must be an integer multiple of h (the truncation-family
/// contract that all radii share one spacing).
GridPtr build_centered_grid(int dim, double radius, double h,
                            std::int64_t node_budget = default_node_budget);

} // namespace spectra
