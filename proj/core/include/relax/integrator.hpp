#pragma once

#include "relax/reduction.hpp"
#include "relax/signal.hpp"
#include "relax/system.hpp"

#include <optional>

namespace relax {

struct IntegrateOptions {
    /// When set, the fast (and micro) states are monitored against this box
    /// and the first violating step is recorded on the trajectory.
    std::optional<ControlBox> fast_bounds;
    /// Layout override; defaults to plain z/y(/x) slices.
    std::optional<Layout> layout;
};

/// IMEX Euler: explicit slow update, implicit linear fast update with the
/// fast matrices frozen at the current slow state. Unconditionally stable in
/// eps for fixed h under the fast-block stability condition.
Trajectory integrate_stiff(const TwoScaleSystem& sys, const ControlSignal& alpha,
                           const ControlSignal& beta, const Vec& z0, const Vec& y0,
                           Index steps, const IntegrateOptions& opts = {});

/// Classical RK4 on the reduced right-hand side, controls held constant over
/// each step (sampled at its left endpoint).
Trajectory integrate_reduced(const ReducedSystem& red, const ControlSignal& alpha,
                             const ControlSignal& beta, const Vec& z0, Index steps,
                             double horizon, const IntegrateOptions& opts = {});

/// IMEX Euler with both stiff blocks implicit: meso scaled by h/eps, micro by
/// h/eps^2, matrices frozen at the current slow state.
Trajectory integrate_three_scale(const ThreeScaleSystem& sys,
                                 const ControlSignal& alpha, const ControlSignal& beta,
                                 const ControlSignal& gamma, const Vec& z0,
                                 const Vec& y0, const Vec& x0, Index steps,
                                 const IntegrateOptions& opts = {});

}  // namespace relax
