#include "relax/hjb.hpp"

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace relax {

namespace {

// Precomputed interpolation stencil of one characteristic foot.
struct FootTable {
    Index corners = 0;
    std::vector<Index> idx;     // nodes * controls * corners
    std::vector<double> weight;
};

// Per-axis displacement limits; an infinite limit disables the check for that
// axis (used with exact-flow feet, which contract instead of overshooting).
void build_feet(const Grid& grid, const std::vector<Vec>& controls,
                const std::function<Vec(const Vec&, const Vec&)>& foot,
                const std::vector<double>& max_displacement, FootTable& table) {
    const Index dim = grid.dim();
    const Index nodes = grid.total_nodes();
    const Index nctrl = static_cast<Index>(controls.size());
    const Index corners = Index(1) << dim;
    table.corners = corners;
    table.idx.resize(static_cast<size_t>(nodes) * nctrl * corners);
    table.weight.resize(table.idx.size());

    std::vector<Index> base(dim);
    std::vector<double> frac(dim);
    for (Index i = 0; i < nodes; ++i) {
        const Vec x = grid.node(i);
        for (Index j = 0; j < nctrl; ++j) {
            Vec f = foot(x, controls[j]);
            for (Index d = 0; d < dim; ++d) {
                const auto& ax = grid.axes[d];
                const double disp = std::abs(f[d] - x[d]);
                if (disp > max_displacement[d] * (1.0 + 1e-9))
                    throw CflViolation(
                        "CFL violated at node " + std::to_string(i) + ", control " +
                        std::to_string(j) + ", axis " + std::to_string(d) +
                        ": displacement " + std::to_string(disp) + " > " +
                        std::to_string(max_displacement[d]));
                double c = std::min(std::max(f[d], ax.lower), ax.upper);
                const double s = (c - ax.lower) / ax.spacing();
                Index b = static_cast<Index>(std::floor(s));
                b = std::max(Index(0), std::min(b, ax.count - 2));
                base[d] = b;
                frac[d] = std::min(std::max(s - double(b), 0.0), 1.0);
            }
            const size_t slot = (static_cast<size_t>(i) * nctrl + j) * corners;
            for (Index mask = 0; mask < corners; ++mask) {
                double w = 1.0;
                Index flat = 0;
                for (Index d = 0; d < dim; ++d) {
                    const bool hi = (mask >> d) & 1;
                    w *= hi ? frac[d] : 1.0 - frac[d];
                    flat = flat * grid.axes[d].count + (base[d] + (hi ? 1 : 0));
                }
                table.idx[slot + mask] = flat;
                table.weight[slot + mask] = w;
            }
        }
    }
}

GridValueFunction march(const Grid& grid, Index slow_dim, const CostSpec& cost,
                        Index steps, Index record_every, const FootTable& table,
                        Index nctrl) {
    if (steps < 1) throw ConfigError("hjb march: steps must be >= 1");
    if (record_every < 0 || (record_every > 0 && steps % record_every != 0))
        throw ConfigError("hjb march: steps must be divisible by record_every");

    const Index nodes = grid.total_nodes();
    const double h = cost.horizon / double(steps);
    const Index corners = table.corners;

    Vec running(nodes), value(nodes);
    for (Index i = 0; i < nodes; ++i) {
        const Vec x = grid.node(i);
        const Vec z = x.head(slow_dim);
        running[i] = h * cost.running(z);
        value[i] = cost.terminal(z);
    }
    if (!value.allFinite()) throw NonFiniteValue("hjb march: non-finite terminal cost");

    GridValueFunction vf;
    vf.grid = grid;
    const Index recorded = record_every > 0 ? steps / record_every + 1 : 2;
    vf.times.resize(recorded);
    vf.values.reserve(recorded);
    vf.times[0] = 0.0;
    vf.values.push_back(value);

    Vec next(nodes);
    Index rec = 1;
    for (Index k = 1; k <= steps; ++k) {
        for (Index i = 0; i < nodes; ++i) {
            double best = std::numeric_limits<double>::infinity();
            const size_t row = static_cast<size_t>(i) * nctrl * corners;
            for (Index j = 0; j < nctrl; ++j) {
                const size_t slot = row + static_cast<size_t>(j) * corners;
                double v = 0.0;
                for (Index cidx = 0; cidx < corners; ++cidx)
                    v += table.weight[slot + cidx] * value[table.idx[slot + cidx]];
                if (v < best) best = v;
            }
            next[i] = running[i] + best;
        }
        value.swap(next);
        if (!value.allFinite())
            throw NonFiniteValue("hjb march: non-finite values at step " +
                                 std::to_string(k));
        const bool record = record_every > 0 ? (k % record_every == 0) : (k == steps);
        if (record) {
            vf.times[rec] = h * double(k);
            vf.values.push_back(value);
            ++rec;
        }
    }
    return vf;
}

std::vector<double> euler_limits(const Grid& grid) {
    std::vector<double> lim(grid.axes.size());
    for (size_t d = 0; d < grid.axes.size(); ++d) lim[d] = grid.axes[d].spacing();
    return lim;
}

void check_budget(const Grid& grid, Index budget) {
    if (grid.total_nodes() > budget)
        throw GridTooLarge("grid has " + std::to_string(grid.total_nodes()) +
                           " nodes, budget " + std::to_string(budget));
}

}  // namespace

GridValueFunction solve_hjb_drift(
    const std::function<Vec(const Vec& x, const Vec& u)>& drift,
    const std::vector<Vec>& controls, Index slow_dim, const CostSpec& cost,
    const Grid& grid, Index steps, const HjbOptions& opts) {
    check_budget(grid, opts.node_budget);
    const double h = cost.horizon / double(steps);
    FootTable table;
    build_feet(grid, controls,
               [&](const Vec& x, const Vec& u) { return Vec(x + h * drift(x, u)); },
               euler_limits(grid), table);
    return march(grid, slow_dim, cost, steps, opts.record_every, table,
                 static_cast<Index>(controls.size()));
}

GridValueFunction solve_hjb_effective(const ReducedSystem& red, const CostSpec& cost,
                                      const Grid& grid, Index steps,
                                      const HjbOptions& opts) {
    if (grid.dim() != red.m)
        throw GridMismatch("solve_hjb_effective: grid dimension must equal m");
    const ControlBox joint = red.omega_A.stacked(red.omega_B);
    const auto controls = joint.vertices_and_midpoint();
    const Index p = red.omega_A.dim();
    auto drift = [&red, p](const Vec& z, const Vec& u) {
        return red.rhs(z, u.head(p), u.tail(u.size() - p));
    };
    return solve_hjb_drift(drift, controls, grid.dim(), cost, grid, steps, opts);
}

GridValueFunction solve_hjb_full(const TwoScaleSystem& sys, const CostSpec& cost,
                                 const Grid& grid_zy, Index steps,
                                 const HjbOptions& opts) {
    if (grid_zy.dim() != sys.m + sys.n)
        throw GridMismatch("solve_hjb_full: grid dimension must equal m + n");
    check_budget(grid_zy, opts.node_budget);

    const double h = cost.horizon / double(steps);
    const ControlBox joint = sys.omega_A.stacked(sys.omega_B);
    const auto controls = joint.vertices_and_midpoint();

    auto foot = [&](const Vec& x, const Vec& u) {
        const Vec z = x.head(sys.m);
        const Vec y = x.tail(sys.n);
        const Vec alpha = u.head(sys.p);
        const Vec beta = u.tail(sys.q);
        Vec out(sys.m + sys.n);
        out.head(sys.m) =
            z + h * (sys.A1(z) * y + sys.B1(z) * alpha + sys.C1(z).col(0));
        out.tail(sys.n) = y + (h / sys.epsilon) * sys.fast_velocity(z, y, beta);
        return out;
    };

    // Slow axes take a full-cell step at most; fast axes are held to
    // h <= c * eps * dy / max fast drift, expressed as a displacement bound.
    std::vector<double> limits(grid_zy.axes.size());
    for (Index d = 0; d < sys.m; ++d) limits[d] = grid_zy.axes[d].spacing();
    for (Index d = sys.m; d < sys.m + sys.n; ++d)
        limits[d] = opts.cfl_multiplier * grid_zy.axes[d].spacing();

    FootTable table;
    build_feet(grid_zy, controls, foot, limits, table);
    return march(grid_zy, sys.m, cost, steps, opts.record_every, table,
                 static_cast<Index>(controls.size()));
}

GridValueFunction solve_hjb_full(const ThreeScaleSystem& sys, const CostSpec& cost,
                                 const Grid& grid_zyx, Index steps,
                                 const HjbOptions& opts) {
    if (grid_zyx.dim() != sys.m + sys.n + sys.l)
        throw GridMismatch("solve_hjb_full: grid dimension must equal m + n + l");
    check_budget(grid_zyx, opts.node_budget);

    const double h = cost.horizon / double(steps);
    const double eps = sys.epsilon;
    const ControlBox joint = sys.omega_A.stacked(sys.omega_B).stacked(sys.omega_G);
    const auto controls = joint.vertices_and_midpoint();

    // Exact affine flow of the frozen stiff blocks: y(t) = psi + e^{tA}(y - psi).
    auto stiff_foot = [](const Mat& a, const Mat& b, const Vec& c, const Vec& y,
                         const Vec& ctrl, double t) {
        Eigen::PartialPivLU<Mat> lu(a);
        if (!(lu.rcond() > 1e-12))
            throw SingularFastMatrix("solve_hjb_full: stiff block singular");
        Vec psi = lu.solve(-(b * ctrl + c));
        Mat propagator = (t * a).exp();
        return Vec(psi + propagator * (y - psi));
    };

    auto foot = [&](const Vec& xall, const Vec& u) {
        const Vec z = xall.head(sys.m);
        const Vec y = xall.segment(sys.m, sys.n);
        const Vec x = xall.tail(sys.l);
        const Vec alpha = u.head(sys.p);
        const Vec beta = u.segment(sys.p, sys.q);
        const Vec gamma = u.tail(sys.r);
        Vec out(sys.m + sys.n + sys.l);
        out.head(sys.m) = z + h * (sys.slow_velocity(z, y, x) + sys.B1(z) * alpha);
        out.segment(sys.m, sys.n) =
            stiff_foot(sys.A2(z), sys.B2(z), sys.C2(z).col(0), y, beta, h / eps);
        out.tail(sys.l) = stiff_foot(sys.A3(z), sys.B3(z), sys.C3(z).col(0), x, gamma,
                                     h / (eps * eps));
        return out;
    };

    std::vector<double> limits(grid_zyx.axes.size(),
                               std::numeric_limits<double>::infinity());
    for (Index d = 0; d < sys.m; ++d) limits[d] = grid_zyx.axes[d].spacing();

    FootTable table;
    build_feet(grid_zyx, controls, foot, limits, table);
    return march(grid_zyx, sys.m, cost, steps, opts.record_every, table,
                 static_cast<Index>(controls.size()));
}

GridValueFunction solve_hjb_multiscale_effective(const ThreeScaleSystem& sys3,
                                                 const CostSpec& cost, const Grid& grid,
                                                 Index steps, const HjbOptions& opts) {
    const CascadeResult cascade = cascade_reduce(sys3);
    return solve_hjb_effective(cascade.macro, cost, grid, steps, opts);
}

namespace {

CellResult solve_cell_generic(const Mat& a, const Mat& b, const Vec& c,
                              const ControlBox& box, const Vec& running_coeff,
                              const Grid& fast_grid, double delta,
                              const CellOptions& opts, const char* who) {
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError(std::string(who) + ": delta must lie in (0, 1)");
    const Index nodes = fast_grid.total_nodes();
    const auto controls = box.vertices_and_midpoint();
    const Index nctrl = static_cast<Index>(controls.size());
    const Index dim = fast_grid.dim();
    const Index corners = Index(1) << dim;

    // dt from the drift magnitude over grid x controls.
    double dt = std::numeric_limits<double>::infinity();
    for (Index d = 0; d < dim; ++d) {
        double gmax = 0.0;
        for (Index i = 0; i < nodes; ++i) {
            const Vec y = fast_grid.node(i);
            for (const Vec& beta : controls) {
                const Vec g = a * y + b * beta + c;
                gmax = std::max(gmax, std::abs(g[d]));
            }
        }
        if (gmax > 0.0)
            dt = std::min(dt, opts.dt_factor * fast_grid.axes[d].spacing() / gmax);
    }
    if (!std::isfinite(dt)) dt = opts.dt_factor * fast_grid.min_spacing();

    // Periodic stencils of the Euler feet, fixed across sweeps.
    std::vector<Index> sidx(static_cast<size_t>(nodes) * nctrl * corners);
    std::vector<double> sweight(sidx.size());
    {
        std::vector<Index> base(dim);
        std::vector<double> frac(dim);
        for (Index i = 0; i < nodes; ++i) {
            const Vec y = fast_grid.node(i);
            for (Index j = 0; j < nctrl; ++j) {
                const Vec f = y + dt * (a * y + b * controls[j] + c);
                for (Index d = 0; d < dim; ++d) {
                    const auto& ax = fast_grid.axes[d];
                    double s = (f[d] - ax.lower) / ax.spacing();
                    s -= std::floor(s / double(ax.count)) * double(ax.count);
                    Index bidx = static_cast<Index>(std::floor(s));
                    if (bidx >= ax.count) bidx -= ax.count;
                    base[d] = bidx;
                    frac[d] = s - double(bidx);
                }
                const size_t slot = (static_cast<size_t>(i) * nctrl + j) * corners;
                for (Index mask = 0; mask < corners; ++mask) {
                    double w = 1.0;
                    Index flat = 0;
                    for (Index d = 0; d < dim; ++d) {
                        const bool hi = (mask >> d) & 1;
                        w *= hi ? frac[d] : 1.0 - frac[d];
                        Index idx = base[d] + (hi ? 1 : 0);
                        if (idx >= fast_grid.axes[d].count) idx -= fast_grid.axes[d].count;
                        flat = flat * fast_grid.axes[d].count + idx;
                    }
                    sidx[slot + mask] = flat;
                    sweight[slot + mask] = w;
                }
            }
        }
    }

    Vec run_cost(nodes);
    for (Index i = 0; i < nodes; ++i)
        run_cost[i] = dt * running_coeff.dot(fast_grid.node(i));

    const double discount = std::exp(-delta * dt);
    Vec w = Vec::Zero(nodes), next(nodes);
    CellResult result;
    result.fast_grid = fast_grid;
    result.dt = dt;
    result.reference_node =
        opts.reference_node >= 0 ? opts.reference_node : nodes / 2;
    if (result.reference_node >= nodes)
        throw ConfigError(std::string(who) + ": reference node out of range");

    double residual = std::numeric_limits<double>::infinity();
    Index it = 0;
    for (; it < opts.max_iterations; ++it) {
        for (Index i = 0; i < nodes; ++i) {
            double best = std::numeric_limits<double>::infinity();
            const size_t row = static_cast<size_t>(i) * nctrl * corners;
            for (Index j = 0; j < nctrl; ++j) {
                const size_t slot = row + static_cast<size_t>(j) * corners;
                double v = 0.0;
                for (Index cidx = 0; cidx < corners; ++cidx)
                    v += sweight[slot + cidx] * w[sidx[slot + cidx]];
                if (v < best) best = v;
            }
            next[i] = run_cost[i] + discount * best;
        }
        residual = (next - w).lpNorm<Eigen::Infinity>();
        w.swap(next);
        if (opts.record_residuals) result.residual_history.push_back(residual);
        if (residual <= opts.tolerance) break;
    }
    if (residual > opts.tolerance)
        throw NoConvergence(std::string(who) + ": residual " + std::to_string(residual) +
                            " after " + std::to_string(it) + " sweeps");

    result.iterations = it + 1;
    result.final_residual = residual;
    result.lambda = -delta * w[result.reference_node];
    result.corrector = w.array() - w[result.reference_node];
    return result;
}

}  // namespace

CellResult solve_cell(const TwoScaleSystem& sys, const Vec& z, const Vec& p,
                      const Grid& fast_grid, double delta, const CellOptions& opts) {
    if (fast_grid.dim() != sys.n)
        throw GridMismatch("solve_cell: fast grid dimension must equal n");
    return solve_cell_generic(sys.A2(z), sys.B2(z), sys.C2(z).col(0), sys.omega_B,
                              sys.A1(z).transpose() * p, fast_grid, delta, opts,
                              "solve_cell");
}

CellResult solve_micro_cell(const ThreeScaleSystem& sys, const Vec& z, const Vec& p,
                            const Grid& fast_grid, double delta,
                            const CellOptions& opts) {
    if (fast_grid.dim() != sys.l)
        throw GridMismatch("solve_micro_cell: fast grid dimension must equal l");
    return solve_cell_generic(sys.A3(z), sys.B3(z), sys.C3(z).col(0), sys.omega_G,
                              sys.A0(z).transpose() * p, fast_grid, delta, opts,
                              "solve_micro_cell");
}

ExpansionReport expansion_check(const GridValueFunction& full,
                                const GridValueFunction& effective,
                                const CellResult& cell, double epsilon) {
    const Grid expected = effective.grid.product(cell.fast_grid);
    if (!full.grid.same_axes(expected))
        throw GridMismatch("expansion_check: full grid is not effective x fast");
    if (full.times.size() != effective.times.size() ||
        (full.times - effective.times).lpNorm<Eigen::Infinity>() > 1e-9)
        throw GridMismatch("expansion_check: recorded times differ");

    const Index slow_nodes = effective.grid.total_nodes();
    const Index fast_nodes = cell.fast_grid.total_nodes();

    ExpansionReport report;
    report.epsilon = epsilon;
    report.eps_squared = epsilon * epsilon;
    report.per_slow_node_r = Vec::Zero(slow_nodes);
    for (Index s = 0; s < full.slices(); ++s) {
        for (Index iz = 0; iz < slow_nodes; ++iz) {
            for (Index iy = 0; iy < fast_nodes; ++iy) {
                const double veps = full.values[s][iz * fast_nodes + iy];
                const double v0 = effective.values[s][iz];
                const double diff = std::abs(veps - v0);
                const double r = std::abs(veps - v0 - epsilon * cell.corrector[iy]);
                report.sup_diff = std::max(report.sup_diff, diff);
                report.r_sup = std::max(report.r_sup, r);
                report.per_slow_node_r[iz] = std::max(report.per_slow_node_r[iz], r);
            }
        }
    }
    return report;
}

}  // namespace relax
