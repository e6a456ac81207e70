#include "spectra/measure.hpp"

#include "spectra/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

namespace spectra {

DiscreteMeasure::DiscreteMeasure(GridPtr grid)
    : grid_(std::move(grid)), density_(static_cast<std::size_t>(grid_->total_nodes()), 0.0) {}

DiscreteMeasure::DiscreteMeasure(GridPtr grid, std::vector<double> density,
                                 std::vector<Atom> atoms, std::vector<std::int64_t> infinite_mask)
    : grid_(std::move(grid)),
      density_(std::move(density)),
      atoms_(std::move(atoms)),
      infinite_mask_(std::move(infinite_mask)) {
    std::sort(infinite_mask_.begin(), infinite_mask_.end());
    infinite_mask_.erase(std::unique(infinite_mask_.begin(), infinite_mask_.end()),
                         infinite_mask_.end());
    validate();
}

void DiscreteMeasure::validate() const {
    if (static_cast<std::int64_t>(density_.size()) != grid_->total_nodes())
        throw config_error("measure density count does not match the grid");
    for (double d : density_)
        if (d < 0.0 || std::isnan(d)) throw config_error("measure density must be nonnegative");
    std::set<std::int64_t> seen;
    for (const auto& a : atoms_) {
        if (a.node < 0 || a.node >= grid_->total_nodes())
            throw config_error("atom node out of range");
        if (a.weight < 0.0 || std::isnan(a.weight))
            throw config_error("atom weight must be nonnegative");
        if (!seen.insert(a.node).second)
            throw config_error("node " + std::to_string(a.node) + " appears twice in atoms");
    }
    for (auto n : infinite_mask_)
        if (n < 0 || n >= grid_->total_nodes())
            throw config_error("infinite-mask node out of range");
}

DiscreteMeasure DiscreteMeasure::lebesgue(GridPtr grid, double density) {
    DiscreteMeasure m(std::move(grid));
    std::fill(m.density_.begin(), m.density_.end(), density);
    m.validate();
    return m;
}

DiscreteMeasure DiscreteMeasure::from_density(GridPtr grid, const ScalarField& density) {
    auto f = GridFunction::sample(grid, density);
    DiscreteMeasure m(std::move(grid));
    m.density_ = f.values();
    m.validate();
    return m;
}

DiscreteMeasure DiscreteMeasure::comb(GridPtr grid, double spacing, const ScalarField& weight) {
    if (!(spacing > 0.0)) throw config_error("comb spacing must be positive");
    if (grid->dim() != 1) throw config_error("comb measures are 1D");
    DiscreteMeasure m(grid);
    const double lo = grid->lower(0), hi = grid->upper(0), h = grid->spacing(0);
    const auto kmin = static_cast<std::int64_t>(std::ceil(lo / spacing));
    const auto kmax = static_cast<std::int64_t>(std::floor(hi / spacing));
    for (std::int64_t k = kmin; k <= kmax; ++k) {
        const double x = k * spacing;
        // Snap to the nearest interior node; skip atoms that fall on the wall.
        const double fi = (x - lo) / h - 1.0;
        const auto i = static_cast<std::int64_t>(std::llround(fi));
        if (i < 0 || i >= grid->total_nodes()) continue;
        const double w = weight.eval({x, 0.0}, 1, i);
        if (w < 0.0) throw config_error("comb weight must be nonnegative");
        if (w > 0.0) m.add_atom(i, w);
    }
    m.validate();
    return m;
}

void DiscreteMeasure::add_atom(std::int64_t node, double weight) {
    for (const auto& a : atoms_)
        if (a.node == node)
            throw config_error("node " + std::to_string(node) + " already carries an atom");
    atoms_.push_back({node, weight});
}

void DiscreteMeasure::set_infinite(std::vector<std::int64_t> nodes) {
    infinite_mask_ = std::move(nodes);
    std::sort(infinite_mask_.begin(), infinite_mask_.end());
    infinite_mask_.erase(std::unique(infinite_mask_.begin(), infinite_mask_.end()),
                         infinite_mask_.end());
    validate();
}

std::vector<double> DiscreteMeasure::form_diagonal() const {
    std::vector<double> diag = density_;
    const double w = grid_->cell_measure();
    for (const auto& a : atoms_) diag[static_cast<std::size_t>(a.node)] += a.weight / w;
    return diag;
}

double DiscreteMeasure::mass(const std::vector<std::int64_t>& nodes) const {
    const double w = grid_->cell_measure();
    double acc = 0.0;
    for (auto n : nodes) {
        if (std::binary_search(infinite_mask_.begin(), infinite_mask_.end(), n))
            return plus_infinity();
        acc += density_[static_cast<std::size_t>(n)] * w;
    }
    if (!atoms_.empty()) {
        std::set<std::int64_t> in(nodes.begin(), nodes.end());
        for (const auto& a : atoms_)
            if (in.count(a.node)) acc += a.weight;
    }
    return acc;
}

double DiscreteMeasure::total_mass() const {
    if (has_infinite()) return plus_infinity();
    const double w = grid_->cell_measure();
    double acc = 0.0;
    for (double d : density_) acc += d * w;
    for (const auto& a : atoms_) acc += a.weight;
    return acc;
}

std::string DiscreteMeasure::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "measure{density:";
    // Hash density and atoms compactly.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (double d : density_) mix(d);
    for (const auto& a : atoms_) {
        mix(static_cast<double>(a.node));
        mix(a.weight);
    }
    for (auto n : infinite_mask_) mix(static_cast<double>(n));
    os << h << "}";
    return os.str();
}

} // namespace spectra
