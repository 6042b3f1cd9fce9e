#include "relax/grid.hpp"
#include "relax/signal.hpp"

#include <cmath>
#include <fstream>

namespace relax {

Grid::Grid(std::vector<GridAxis> ax) : axes(std::move(ax)) {
    for (const auto& a : axes) {
        if (a.count < 3) throw ConfigError("Grid: node count must be >= 3");
        if (!(a.lower < a.upper)) throw ConfigError("Grid: lower must be < upper");
    }
}

Index Grid::total_nodes() const {
    Index total = 1;
    for (const auto& a : axes) total *= a.count;
    return total;
}

double Grid::min_spacing() const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& a : axes) s = std::min(s, a.spacing());
    return s;
}

Index Grid::flat_index(const std::vector<Index>& multi) const {
    Index flat = 0;
    for (size_t d = 0; d < axes.size(); ++d) flat = flat * axes[d].count + multi[d];
    return flat;
}

std::vector<Index> Grid::multi_index(Index flat) const {
    std::vector<Index> multi(axes.size());
    for (size_t d = axes.size(); d-- > 0;) {
        multi[d] = flat % axes[d].count;
        flat /= axes[d].count;
    }
    return multi;
}

Vec Grid::node(Index flat) const {
    const auto multi = multi_index(flat);
    Vec x(dim());
    for (Index d = 0; d < dim(); ++d) x[d] = axes[d].coord(multi[d]);
    return x;
}

Grid Grid::product(const Grid& other) const {
    std::vector<GridAxis> ax = axes;
    ax.insert(ax.end(), other.axes.begin(), other.axes.end());
    return Grid(std::move(ax));
}

bool Grid::same_axes(const Grid& other, double tol) const {
    if (axes.size() != other.axes.size()) return false;
    for (size_t d = 0; d < axes.size(); ++d) {
        if (axes[d].count != other.axes[d].count) return false;
        if (std::abs(axes[d].lower - other.axes[d].lower) > tol) return false;
        if (std::abs(axes[d].upper - other.axes[d].upper) > tol) return false;
    }
    return true;
}

namespace {

// Shared corner loop: base index and weight per axis are precomputed by the
// boundary rule, then the 2^dim corners are accumulated.
template <typename IndexRule>
double interp_corners(const Grid& grid, const Vec& values, const Vec& point,
                      IndexRule&& rule) {
    const Index dim = grid.dim();
    if (point.size() != dim) throw DimensionMismatch("interp: point dimension mismatch");
    std::vector<Index> base(dim);
    std::vector<double> frac(dim);
    for (Index d = 0; d < dim; ++d) rule(d, point[d], base[d], frac[d]);

    double result = 0.0;
    const unsigned long corners = 1ul << dim;
    for (unsigned long mask = 0; mask < corners; ++mask) {
        double weight = 1.0;
        Index flat = 0;
        for (Index d = 0; d < dim; ++d) {
            const bool hi = (mask >> d) & 1ul;
            weight *= hi ? frac[d] : 1.0 - frac[d];
            Index idx = base[d] + (hi ? 1 : 0);
            const Index count = grid.axes[d].count;
            if (idx >= count) idx -= count;  // periodic upper neighbour
            flat = flat * count + idx;
        }
        if (weight != 0.0) result += weight * values[flat];
    }
    return result;
}

}  // namespace

double interp_clamped(const Grid& grid, const Vec& values, const Vec& point) {
    return interp_corners(grid, values, point,
                          [&grid](Index d, double x, Index& base, double& frac) {
                              const auto& ax = grid.axes[d];
                              x = std::min(std::max(x, ax.lower), ax.upper);
                              const double s = (x - ax.lower) / ax.spacing();
                              base = std::min(static_cast<Index>(std::floor(s)),
                                              ax.count - 2);
                              base = std::max(base, Index(0));
                              frac = s - double(base);
                              frac = std::min(std::max(frac, 0.0), 1.0);
                          });
}

double interp_periodic(const Grid& grid, const Vec& values, const Vec& point) {
    return interp_corners(grid, values, point,
                          [&grid](Index d, double x, Index& base, double& frac) {
                              const auto& ax = grid.axes[d];
                              const double period = ax.spacing() * double(ax.count);
                              double s = (x - ax.lower) / ax.spacing();
                              s -= std::floor(s / double(ax.count)) * double(ax.count);
                              base = static_cast<Index>(std::floor(s));
                              if (base >= ax.count) base -= ax.count;
                              frac = s - double(base);
                              (void)period;
                          });
}

void write_value_csv(const GridValueFunction& vf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "slice";
    for (Index d = 0; d < vf.grid.dim(); ++d) out << ",axis" << d;
    out << ",value\n";
    for (Index s = 0; s < vf.slices(); ++s) {
        for (Index i = 0; i < vf.grid.total_nodes(); ++i) {
            out << s;
            Vec x = vf.grid.node(i);
            for (Index d = 0; d < x.size(); ++d) out << "," << format_full(x[d]);
            out << "," << format_full(vf.values[s][i]) << "\n";
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace relax
