#include "relax/integrator.hpp"

#include <Eigen/LU>

namespace relax {

namespace {

void check_finite_state(const Vec& v, Index step, const char* who) {
    if (!v.allFinite())
        throw NonFiniteState(std::string(who) + ": non-finite state at step " +
                             std::to_string(step));
}

Vec implicit_fast_step(const Mat& a, const Mat& b, const Vec& c, const Vec& y,
                       const Vec& beta, double scale, Index step, const char* who) {
    // (I - scale * A) y+ = y + scale * (B beta + C)
    Mat lhs = Mat::Identity(a.rows(), a.cols()) - scale * a;
    Eigen::PartialPivLU<Mat> lu(lhs);
    if (!(lu.rcond() > 1e-12))
        throw SingularFastMatrix(std::string(who) + ": implicit matrix singular at step " +
                                 std::to_string(step));
    Vec next = lu.solve(y + scale * (b * beta + c));
    check_finite_state(next, step, who);
    return next;
}

Layout default_layout(Index m, Index n, Index l = 0) {
    Layout layout;
    layout.slices.push_back({"z", 0, m, ScaleTag::Slow});
    layout.slices.push_back({"y", m, n, ScaleTag::Meso});
    if (l > 0) layout.slices.push_back({"x", m + n, l, ScaleTag::Micro});
    return layout;
}

void monitor_bounds(const IntegrateOptions& opts, const Vec& fast, Index step,
                    Trajectory& traj) {
    if (opts.fast_bounds && !traj.bounds_warning_step &&
        !opts.fast_bounds->contains(fast))
        traj.bounds_warning_step = step;
}

}  // namespace

Trajectory integrate_stiff(const TwoScaleSystem& sys, const ControlSignal& alpha,
                           const ControlSignal& beta, const Vec& z0, const Vec& y0,
                           Index steps, const IntegrateOptions& opts) {
    if (steps < 1) throw ConfigError("integrate_stiff: steps must be >= 1");
    if (!(sys.epsilon > 0.0)) throw ConfigError("integrate_stiff: epsilon must be positive");
    if (!z0.allFinite() || !y0.allFinite())
        throw NonFiniteState("integrate_stiff: non-finite initial state");
    if (z0.size() != sys.m || y0.size() != sys.n)
        throw DimensionMismatch("integrate_stiff: initial state sizes must be (m, n)");

    const double horizon = alpha.horizon();
    const double h = horizon / double(steps);

    Trajectory traj;
    traj.times = Vec::LinSpaced(steps + 1, 0.0, horizon);
    traj.states.resize(steps + 1, sys.m + sys.n);
    traj.layout = opts.layout.value_or(default_layout(sys.m, sys.n));

    Vec z = z0, y = y0;
    traj.states.row(0) << z.transpose(), y.transpose();
    for (Index k = 0; k < steps; ++k) {
        const double t = traj.times[k];
        const Vec& a = alpha.value_at(t);
        const Vec& b = beta.value_at(t);
        Vec z_next = z + h * (sys.slow_velocity(z, y) + sys.B1(z) * a);
        Vec y_next = implicit_fast_step(sys.A2(z), sys.B2(z), sys.C2(z).col(0), y, b,
                                        h / sys.epsilon, k, "integrate_stiff");
        check_finite_state(z_next, k, "integrate_stiff");
        z = std::move(z_next);
        y = std::move(y_next);
        monitor_bounds(opts, y, k + 1, traj);
        traj.states.row(k + 1) << z.transpose(), y.transpose();
    }
    return traj;
}

Trajectory integrate_reduced(const ReducedSystem& red, const ControlSignal& alpha,
                             const ControlSignal& beta, const Vec& z0, Index steps,
                             double horizon, const IntegrateOptions& opts) {
    if (steps < 1) throw ConfigError("integrate_reduced: steps must be >= 1");
    if (!z0.allFinite()) throw NonFiniteState("integrate_reduced: non-finite initial state");
    const double h = horizon / double(steps);

    Trajectory traj;
    traj.times = Vec::LinSpaced(steps + 1, 0.0, horizon);
    traj.states.resize(steps + 1, red.m);
    if (opts.layout) {
        traj.layout = *opts.layout;
    } else {
        traj.layout.slices.push_back({"z", 0, red.m, ScaleTag::Slow});
    }

    Vec z = z0;
    traj.states.row(0) = z.transpose();
    for (Index k = 0; k < steps; ++k) {
        const double t = traj.times[k];
        // controls held constant over the step, sampled at its left endpoint
        const Vec& a = alpha.value_at(t);
        const Vec& b = beta.value_at(t);
        auto f = [&](const Vec& zz) { return red.rhs(zz, a, b); };
        Vec k1 = f(z);
        Vec k2 = f(z + 0.5 * h * k1);
        Vec k3 = f(z + 0.5 * h * k2);
        Vec k4 = f(z + h * k3);
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite_state(z, k, "integrate_reduced");
        traj.states.row(k + 1) = z.transpose();
    }
    return traj;
}

Trajectory integrate_three_scale(const ThreeScaleSystem& sys,
                                 const ControlSignal& alpha, const ControlSignal& beta,
                                 const ControlSignal& gamma, const Vec& z0,
                                 const Vec& y0, const Vec& x0, Index steps,
                                 const IntegrateOptions& opts) {
    if (steps < 1) throw ConfigError("integrate_three_scale: steps must be >= 1");
    if (!(sys.epsilon > 0.0))
        throw ConfigError("integrate_three_scale: epsilon must be positive");
    if (!z0.allFinite() || !y0.allFinite() || !x0.allFinite())
        throw NonFiniteState("integrate_three_scale: non-finite initial state");
    if (z0.size() != sys.m || y0.size() != sys.n || x0.size() != sys.l)
        throw DimensionMismatch("integrate_three_scale: initial sizes must be (m, n, l)");

    const double horizon = alpha.horizon();
    const double h = horizon / double(steps);
    const double eps = sys.epsilon;

    Trajectory traj;
    traj.times = Vec::LinSpaced(steps + 1, 0.0, horizon);
    traj.states.resize(steps + 1, sys.m + sys.n + sys.l);
    traj.layout = opts.layout.value_or(default_layout(sys.m, sys.n, sys.l));

    Vec z = z0, y = y0, x = x0;
    traj.states.row(0) << z.transpose(), y.transpose(), x.transpose();
    for (Index k = 0; k < steps; ++k) {
        const double t = traj.times[k];
        const Vec& a = alpha.value_at(t);
        const Vec& b = beta.value_at(t);
        const Vec& g = gamma.value_at(t);
        Vec z_next = z + h * (sys.slow_velocity(z, y, x) + sys.B1(z) * a);
        Vec y_next = implicit_fast_step(sys.A2(z), sys.B2(z), sys.C2(z).col(0), y, b,
                                        h / eps, k, "integrate_three_scale");
        Vec x_next = implicit_fast_step(sys.A3(z), sys.B3(z), sys.C3(z).col(0), x, g,
                                        h / (eps * eps), k, "integrate_three_scale");
        check_finite_state(z_next, k, "integrate_three_scale");
        z = std::move(z_next);
        y = std::move(y_next);
        x = std::move(x_next);
        monitor_bounds(opts, y, k + 1, traj);
        traj.states.row(k + 1) << z.transpose(), y.transpose(), x.transpose();
    }
    return traj;
}

}  // namespace relax
