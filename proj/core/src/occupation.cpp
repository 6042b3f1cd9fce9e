#include "relax/occupation.hpp"

#include "relax/reduction.hpp"

#include <cmath>

namespace relax {

Index OccupationalHistogram::bin_of(const Vec& y) const {
    Index flat = 0;
    for (Index d = 0; d < box.dim(); ++d) {
        const auto& ax = box.axes[d];
        const double width = (ax.upper - ax.lower) / double(ax.count);
        if (y[d] < ax.lower || y[d] > ax.upper)
            throw BoundsExceeded("occupational measure: state left the binned box");
        Index i = static_cast<Index>(std::floor((y[d] - ax.lower) / width));
        i = std::min(i, ax.count - 1);
        flat = flat * ax.count + i;
    }
    return flat;
}

double OccupationalHistogram::mass_near_equilibrium(Index window) const {
    std::vector<Index> center(box.dim());
    for (Index d = 0; d < box.dim(); ++d) {
        const auto& ax = box.axes[d];
        const double width = (ax.upper - ax.lower) / double(ax.count);
        Index i = static_cast<Index>(std::floor((equilibrium[d] - ax.lower) / width));
        center[d] = std::min(std::max(i, Index(0)), ax.count - 1);
    }
    double mass = 0.0;
    const Index total = counts.size();
    for (Index flat = 0; flat < total; ++flat) {
        Index rest = flat;
        bool inside = true;
        for (Index d = box.dim(); d-- > 0;) {
            const Index i = rest % box.axes[d].count;
            rest /= box.axes[d].count;
            if (std::abs(i - center[d]) > window) inside = false;
        }
        if (inside) mass += counts[flat];
    }
    return mass;
}

OccupationalHistogram estimate_occupational_measure(const TwoScaleSystem& sys,
                                                    const Vec& frozen_z, const Vec& beta,
                                                    const Vec& y0, double horizon,
                                                    const ControlBox& box,
                                                    const OccupationOptions& opts) {
    if (!(horizon > 0.0)) throw ConfigError("occupational measure: horizon must be positive");
    if (box.dim() != sys.n)
        throw DimensionMismatch("occupational measure: box dimension must equal n");

    OccupationalHistogram hist;
    hist.frozen_z = frozen_z;
    hist.beta = beta;
    hist.horizon = horizon;
    hist.equilibrium = solve_static(sys, frozen_z, beta);
    std::vector<GridAxis> axes(sys.n);
    for (Index d = 0; d < sys.n; ++d)
        axes[d] = {box.lower[d], box.upper[d], opts.bins_per_axis};
    hist.box.axes = axes;

    Index nbins = 1;
    for (Index d = 0; d < sys.n; ++d) nbins *= opts.bins_per_axis;
    Vec raw = Vec::Zero(nbins);

    // Frozen coefficients: the fast flow is autonomous, eps = 1.
    const Mat a = sys.A2(frozen_z);
    const Vec forcing = sys.B2(frozen_z) * beta + sys.C2(frozen_z).col(0);
    auto rhs = [&](const Vec& y) { return Vec(a * y + forcing); };

    const Index steps =
        std::max<Index>(1, static_cast<Index>(std::ceil(horizon * opts.substeps_per_unit_time)));
    const double h = horizon / double(steps);

    Vec y = y0;
    for (Index k = 0; k < steps; ++k) {
        raw[hist.bin_of(y)] += 1.0;
        Vec k1 = rhs(y);
        Vec k2 = rhs(y + 0.5 * h * k1);
        Vec k3 = rhs(y + 0.5 * h * k2);
        Vec k4 = rhs(y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite())
            throw NonFiniteState("occupational measure: non-finite fast state");
    }
    hist.counts = raw / double(steps);
    return hist;
}

}  // namespace relax
