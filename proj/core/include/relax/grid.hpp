#pragma once

#include "relax/types.hpp"

#include <string>
#include <vector>

namespace relax {

struct GridAxis {
    double lower = 0.0;
    double upper = 1.0;
    Index count = 3;  // node count, >= 3

    double spacing() const { return (upper - lower) / double(count - 1); }
    double coord(Index i) const { return lower + spacing() * double(i); }
};

/// Rectangular nodal grid; values are stored row-major with the last axis
/// fastest.
struct Grid {
    std::vector<GridAxis> axes;

    Grid() = default;
    explicit Grid(std::vector<GridAxis> ax);

    Index dim() const { return static_cast<Index>(axes.size()); }
    Index total_nodes() const;
    double min_spacing() const;

    Index flat_index(const std::vector<Index>& multi) const;
    std::vector<Index> multi_index(Index flat) const;
    Vec node(Index flat) const;

    /// Product grid: this grid's axes followed by `other`'s.
    Grid product(const Grid& other) const;
    bool same_axes(const Grid& other, double tol = 1e-12) const;
};

/// Multilinear interpolation with constant extrapolation outside the grid
/// (query coordinates clamped to the box).
double interp_clamped(const Grid& grid, const Vec& values, const Vec& point);

/// Multilinear interpolation with periodic wrap-around; the period per axis
/// is upper - lower + spacing (node `count` would alias node 0).
double interp_periodic(const Grid& grid, const Vec& values, const Vec& point);

/// Value function on a grid marched over a uniform time grid. Slice 0 holds
/// the terminal cost sampled at nodes.
struct GridValueFunction {
    Grid grid;
    Vec times;
    std::vector<Vec> values;  // one nodal array per time slice

    Index slices() const { return static_cast<Index>(values.size()); }
    const Vec& final_slice() const { return values.back(); }
    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// CSV export: slice index first, then axis coordinates, then the value.
void write_value_csv(const GridValueFunction& vf, const std::string& path);

}  // namespace relax
