#pragma once

#include "relax/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace relax {

/// Piecewise-constant control signal on [0, T]. values[k] applies on
/// [breakpoints[k], breakpoints[k+1]).
struct ControlSignal {
    Vec breakpoints;          // size k+1, starts at 0, ends at T
    std::vector<Vec> values;  // size k, each inside box
    ControlBox box;

    ControlSignal() = default;
    ControlSignal(Vec breaks, std::vector<Vec> vals, ControlBox b);

    static ControlSignal constant(const Vec& value, double horizon, ControlBox box);
    /// Equispaced switching between the given values.
    static ControlSignal switching(const std::vector<Vec>& vals, double horizon,
                                   ControlBox box);

    double horizon() const { return breakpoints[breakpoints.size() - 1]; }
    const Vec& value_at(double t) const;
};

enum class ScaleTag { Slow, Meso, Micro };

struct StateSlice {
    std::string name;
    Index offset = 0;
    Index width = 0;
    ScaleTag tag = ScaleTag::Slow;
};

/// Named slices partitioning a state vector, with slow/meso/micro tags.
/// "slow", "meso"/"fast" and "micro" resolve to the union of the tagged
/// slices.
struct Layout {
    std::vector<StateSlice> slices;

    Index total_width() const;
    /// Column indices of a named slice or tag group; LayoutMismatch if absent.
    std::vector<Index> columns(const std::string& name) const;
    bool has(const std::string& name) const;
};

struct Trajectory {
    Vec times;    // uniform grid, N+1 points on [0, T]
    Mat states;   // (N+1) x dim, row per grid time
    Layout layout;
    std::optional<Index> bounds_warning_step;  // first step the fast state left
                                               // the monitored box, if any

    Index steps() const { return times.size() - 1; }
    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    Vec state_at(Index k) const { return states.row(k).transpose(); }
};

/// max over grid times of the sup-norm deviation restricted to the named
/// slice; the time grids must coincide.
double trajectory_error(const Trajectory& a, const Trajectory& b,
                        const std::string& component);

/// CSV with header `time,<slice>_<index>,...`, 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

/// Formats a double with 17 significant digits, locale-independent.
std::string format_full(double v);

}  // namespace relax
