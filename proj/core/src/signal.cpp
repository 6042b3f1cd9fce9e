#include "relax/signal.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace relax {

ControlSignal::ControlSignal(Vec breaks, std::vector<Vec> vals, ControlBox b)
    : breakpoints(std::move(breaks)), values(std::move(vals)), box(std::move(b)) {
    if (breakpoints.size() < 2)
        throw ConfigError("ControlSignal: need at least two breakpoints");
    if (static_cast<Index>(values.size()) != breakpoints.size() - 1)
        throw ConfigError("ControlSignal: values count must be breakpoints-1");
    if (breakpoints[0] != 0.0)
        throw ConfigError("ControlSignal: breakpoints must start at 0");
    for (Index i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw ConfigError("ControlSignal: breakpoints must be increasing");
    for (const Vec& v : values)
        if (!box.contains(v))
            throw ConfigError("ControlSignal: value outside the control box");
}

ControlSignal ControlSignal::constant(const Vec& value, double horizon, ControlBox box) {
    Vec breaks(2);
    breaks << 0.0, horizon;
    return ControlSignal(breaks, {value}, std::move(box));
}

ControlSignal ControlSignal::switching(const std::vector<Vec>& vals, double horizon,
                                       ControlBox box) {
    if (vals.empty()) throw ConfigError("ControlSignal::switching: no values");
    const Index k = static_cast<Index>(vals.size());
    Vec breaks(k + 1);
    for (Index i = 0; i <= k; ++i) breaks[i] = horizon * double(i) / double(k);
    breaks[k] = horizon;
    return ControlSignal(breaks, vals, std::move(box));
}

const Vec& ControlSignal::value_at(double t) const {
    // Last interval is closed at T.
    Index lo = 0;
    Index hi = breakpoints.size() - 1;
    while (lo + 1 < hi) {
        Index mid = (lo + hi) / 2;
        if (breakpoints[mid] <= t)
            lo = mid;
        else
            hi = mid;
    }
    return values[static_cast<size_t>(lo)];
}

Index Layout::total_width() const {
    Index w = 0;
    for (const auto& s : slices) w += s.width;
    return w;
}

bool Layout::has(const std::string& name) const {
    for (const auto& s : slices)
        if (s.name == name) return true;
    return name == "slow" || name == "meso" || name == "fast" || name == "micro";
}

std::vector<Index> Layout::columns(const std::string& name) const {
    std::vector<Index> cols;
    auto push_slice = [&cols](const StateSlice& s) {
        for (Index i = 0; i < s.width; ++i) cols.push_back(s.offset + i);
    };
    for (const auto& s : slices)
        if (s.name == name) {
            push_slice(s);
            return cols;
        }
    std::optional<ScaleTag> tag;
    if (name == "slow") tag = ScaleTag::Slow;
    if (name == "meso" || name == "fast") tag = ScaleTag::Meso;
    if (name == "micro") tag = ScaleTag::Micro;
    if (!tag) throw LayoutMismatch("Layout: unknown slice '" + name + "'");
    for (const auto& s : slices)
        if (s.tag == *tag) push_slice(s);
    if (cols.empty()) throw LayoutMismatch("Layout: no slices tagged '" + name + "'");
    return cols;
}

double trajectory_error(const Trajectory& a, const Trajectory& b,
                        const std::string& component) {
    if (a.times.size() != b.times.size())
        throw GridMismatch("trajectory_error: time grids differ in length");
    if ((a.times - b.times).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + a.times.cwiseAbs().maxCoeff()))
        throw GridMismatch("trajectory_error: time grids differ");
    const auto cols_a = a.layout.columns(component);
    const auto cols_b = b.layout.columns(component);
    if (cols_a.size() != cols_b.size())
        throw GridMismatch("trajectory_error: slice widths differ");
    double err = 0.0;
    for (Index k = 0; k < a.times.size(); ++k)
        for (size_t j = 0; j < cols_a.size(); ++j)
            err = std::max(err, std::abs(a.states(k, cols_a[j]) - b.states(k, cols_b[j])));
    return err;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "time";
    for (const auto& s : traj.layout.slices)
        for (Index i = 0; i < s.width; ++i) out << "," << s.name << "_" << i;
    out << "\n";
    for (Index k = 0; k < traj.times.size(); ++k) {
        out << format_full(traj.times[k]);
        for (Index j = 0; j < traj.states.cols(); ++j)
            out << "," << format_full(traj.states(k, j));
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace relax
