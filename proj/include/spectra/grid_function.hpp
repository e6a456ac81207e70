#pragma once

#include "spectra/grid.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace spectra {

/// A region of the box, used by indicator potentials, infinity masks and
/// task regions. Distances are measured from the origin.
struct Region {
    enum class Kind { inside_radius, outside_radius, box };
    enum class Norm { l2, linf };

    Kind kind = Kind::inside_radius;
    Norm norm = Norm::linf;
    double radius = 1.0;
    std::array<double, 2> box_lower{0.0, 0.0};
    std::array<double, 2> box_upper{0.0, 0.0};

    bool contains(const std::array<double, 2>& x, int dim) const;
};

/// Analytic scalar field over the box: the named potential/density families
/// plus tabulated node values. Evaluation at +inf marks form-domain removal.
struct ScalarField {
    enum class Family { zero, constant, poly, abs_pow, indicator, tabulated };

    struct PolyTerm {
        double coef = 0.0;
        std::array<int, 2> pow{0, 0};
    };

    Family family = Family::zero;
    double constant = 0.0;               // constant
    std::vector<PolyTerm> terms;         // poly
    double coef = 1.0;                   // abs_pow: coef * |x|_2^exponent
    double exponent = 2.0;
    Region region;                       // indicator
    double indicator_value = 0.0;        // may be +inf
    std::vector<double> table;           // tabulated, one value per node

    double eval(const std::array<double, 2>& x, int dim, std::int64_t node) const;

    static ScalarField zero_field() { return {}; }
    static ScalarField constant_field(double c);
    static ScalarField poly(std::vector<PolyTerm> t);
    static ScalarField abs_power(double coef, double exponent);
    static ScalarField indicator(Region r, double value);
    static ScalarField tabulated(std::vector<double> values);

    /// Stable textual form, used for cache keys.
    std::string describe() const;
};

inline double plus_infinity() { return std::numeric_limits<double>::infinity(); }

/// One real value per grid node; +inf entries are allowed only for functions
/// used as V+ or as masks. All norms carry the cell measure.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(GridPtr grid, double fill = 0.0);
    GridFunction(GridPtr grid, std::vector<double> values);

    static GridFunction sample(GridPtr grid, const ScalarField& f);
    /// Indicator of a node set (1 on the set, 0 elsewhere).
    static GridFunction indicator(GridPtr grid, const std::vector<std::int64_t>& nodes);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
    double operator[](std::int64_t i) const { return values_[i]; }
    double& operator[](std::int64_t i) { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool has_infinite() const;
    std::vector<std::int64_t> infinite_nodes() const;

    double norm_l1() const;
    double norm_l2() const;
    double norm_linf() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

} // namespace spectra
