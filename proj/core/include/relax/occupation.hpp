#pragma once

#include "relax/grid.hpp"
#include "relax/system.hpp"

namespace relax {

/// Empirical occupational measure of the frozen-slow fast flow (run in fast
/// time, eps = 1): normalized time-in-bin histogram over the fast box.
struct OccupationalHistogram {
    Grid box;          // binning box; axis count = bins per axis
    Vec counts;        // normalized, sums to 1
    Vec frozen_z;
    Vec beta;
    double horizon = 0.0;
    Vec equilibrium;   // psi(z, beta)

    Index bin_of(const Vec& y) const;
    /// Mass of the bins within `window` index steps (per axis) of the bin
    /// containing the equilibrium.
    double mass_near_equilibrium(Index window) const;
    double total_mass() const { return counts.sum(); }
};

struct OccupationOptions {
    Index bins_per_axis = 50;
    Index substeps_per_unit_time = 200;  // RK4 resolution
};

/// Integrates dy/ds = A2(z) y + B2(z) beta + C2(z) at frozen z over [0, T]
/// and bins the visited states by time fraction. BoundsExceeded if the state
/// leaves the binning box.
OccupationalHistogram estimate_occupational_measure(const TwoScaleSystem& sys,
                                                    const Vec& frozen_z, const Vec& beta,
                                                    const Vec& y0, double horizon,
                                                    const ControlBox& box,
                                                    const OccupationOptions& opts = {});

}  // namespace relax
