#include "spectra/grid_function.hpp"

#include "spectra/errors.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace spectra {

bool Region::contains(const std::array<double, 2>& x, int dim) const {
    if (kind == Kind::box) {
        for (int a = 0; a < dim; ++a)
            if (x[a] < box_lower[a] || x[a] > box_upper[a]) return false;
        return true;
    }
    double r = 0.0;
    if (norm == Norm::l2) {
        for (int a = 0; a < dim; ++a) r += x[a] * x[a];
        r = std::sqrt(r);
    } else {
        for (int a = 0; a < dim; ++a) r = std::max(r, std::abs(x[a]));
    }
    return kind == Kind::inside_radius ? (r <= radius) : (r > radius);
}

double ScalarField::eval(const std::array<double, 2>& x, int dim, std::int64_t node) const {
    switch (family) {
    case Family::zero:
        return 0.0;
    case Family::constant:
        return constant;
    case Family::poly: {
        double acc = 0.0;
        for (const auto& t : terms) {
            double v = t.coef;
            for (int a = 0; a < dim; ++a)
                for (int p = 0; p < t.pow[a]; ++p) v *= x[a];
            acc += v;
        }
        return acc;
    }
    case Family::abs_pow: {
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
        return coef * std::pow(std::sqrt(r2), exponent);
    }
    case Family::indicator:
        return region.contains(x, dim) ? indicator_value : 0.0;
    case Family::tabulated:
        return table.at(static_cast<std::size_t>(node));
    }
    return 0.0;
}

ScalarField ScalarField::constant_field(double c) {
    ScalarField f;
    f.family = Family::constant;
    f.constant = c;
    return f;
}

ScalarField ScalarField::poly(std::vector<PolyTerm> t) {
    ScalarField f;
    f.family = Family::poly;
    f.terms = std::move(t);
    return f;
}

ScalarField ScalarField::abs_power(double coef, double exponent) {
    ScalarField f;
    f.family = Family::abs_pow;
    f.coef = coef;
    f.exponent = exponent;
    return f;
}

ScalarField ScalarField::indicator(Region r, double value) {
    ScalarField f;
    f.family = Family::indicator;
    f.region = r;
    f.indicator_value = value;
    return f;
}

ScalarField ScalarField::tabulated(std::vector<double> values) {
    ScalarField f;
    f.family = Family::tabulated;
    f.table = std::move(values);
    return f;
}

std::string ScalarField::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (family) {
    case Family::zero:
        os << "zero";
        break;
    case Family::constant:
        os << "const(" << constant << ")";
        break;
    case Family::poly:
        os << "poly(";
        for (const auto& t : terms) os << t.coef << "*x^" << t.pow[0] << "*y^" << t.pow[1] << ";";
        os << ")";
        break;
    case Family::abs_pow:
        os << "abspow(" << coef << "," << exponent << ")";
        break;
    case Family::indicator:
        os << "ind(" << static_cast<int>(region.kind) << "," << static_cast<int>(region.norm)
           << "," << region.radius << "," << region.box_lower[0] << "," << region.box_lower[1]
           << "," << region.box_upper[0] << "," << region.box_upper[1] << ";" << indicator_value
           << ")";
        break;
    case Family::tabulated: {
        // Hash the table rather than embedding it.
        std::uint64_t h = 1469598103934665603ull;
        for (double v : table) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xff;
                h *= 1099511628211ull;
            }
        }
        os << "tab(" << table.size() << "," << h << ")";
        break;
    }
    }
    return os.str();
}

GridFunction::GridFunction(GridPtr grid, double fill)
    : grid_(std::move(grid)), values_(static_cast<std::size_t>(grid_->total_nodes()), fill) {}

GridFunction::GridFunction(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::int64_t>(values_.size()) != grid_->total_nodes())
        throw config_error("grid function value count does not match the grid");
}

GridFunction GridFunction::sample(GridPtr grid, const ScalarField& f) {
    GridFunction out(grid);
    const std::int64_t n = grid->total_nodes();
    if (f.family == ScalarField::Family::tabulated &&
        static_cast<std::int64_t>(f.table.size()) != n)
        throw config_error("tabulated field has " + std::to_string(f.table.size()) +
                           " values for a grid of " + std::to_string(n) + " nodes");
    for (std::int64_t i = 0; i < n; ++i)
        out[i] = f.eval(grid->coords(i), grid->dim(), i);
    return out;
}

GridFunction GridFunction::indicator(GridPtr grid, const std::vector<std::int64_t>& nodes) {
    GridFunction out(grid);
    for (auto i : nodes) out[i] = 1.0;
    return out;
}

bool GridFunction::has_infinite() const {
    return std::any_of(values_.begin(), values_.end(),
                       [](double v) { return std::isinf(v); });
}

std::vector<std::int64_t> GridFunction::infinite_nodes() const {
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (std::isinf(values_[i])) out.push_back(static_cast<std::int64_t>(i));
    return out;
}

double GridFunction::norm_l1() const {
    double acc = 0.0;
    for (double v : values_) acc += std::abs(v);
    return grid_->cell_measure() * acc;
}

double GridFunction::norm_l2() const {
    double acc = 0.0;
    for (double v : values_) acc += v * v;
    return std::sqrt(grid_->cell_measure() * acc);
}

double GridFunction::norm_linf() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

} // namespace spectra
