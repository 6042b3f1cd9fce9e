#pragma once

#include "relax/grid.hpp"
#include "relax/reduction.hpp"
#include "relax/system.hpp"

#include <vector>

namespace relax {

struct HjbOptions {
    /// The c in the fast-axis step bound h <= c * eps * dy / max fast drift.
    double cfl_multiplier = 1.0;
    /// GridTooLarge above this node count.
    Index node_budget = 4'000'000;
    /// Record every k-th slice (steps must be divisible by k); 0 keeps only
    /// the initial and final slices.
    Index record_every = 0;
};

/// Pair (lambda, corrector) produced by the vanishing-discount cell solver.
/// The corrector is normalized to vanish at the reference node.
struct CellResult {
    double lambda = 0.0;
    Vec corrector;
    Index reference_node = 0;
    Grid fast_grid;
    Index iterations = 0;
    double final_residual = 0.0;
    double dt = 0.0;
    std::vector<double> residual_history;  // filled when requested
};

struct CellOptions {
    double dt_factor = 5.0;       // dt = dt_factor * min_d(spacing_d / max|g_d|)
    double tolerance = 1e-8;      // sup-residual stopping threshold
    Index max_iterations = 20'000'000;
    Index reference_node = -1;    // -1: grid centre node
    bool record_residuals = false;
};

/// Semi-Lagrangian march of the effective HJB over the slow grid; the control
/// search runs over the vertices plus midpoint of Omega_A x Omega_B (exact for
/// the affine Hamiltonian). Slice 0 is the terminal cost.
GridValueFunction solve_hjb_effective(const ReducedSystem& red, const CostSpec& cost,
                                      const Grid& grid, Index steps,
                                      const HjbOptions& opts = {});

/// Same march driven by an arbitrary controlled drift; `controls` is the
/// finite search set and `slow_dim` the number of leading coordinates the
/// costs see.
GridValueFunction solve_hjb_drift(
    const std::function<Vec(const Vec& x, const Vec& u)>& drift,
    const std::vector<Vec>& controls, Index slow_dim, const CostSpec& cost,
    const Grid& grid, Index steps, const HjbOptions& opts = {});

/// Full two-scale HJB over the product (z, y) grid with characteristic step
/// (z + h f_slow, y + (h/eps) f_fast). Practical only for m + n <= 3.
GridValueFunction solve_hjb_full(const TwoScaleSystem& sys, const CostSpec& cost,
                                 const Grid& grid_zy, Index steps,
                                 const HjbOptions& opts = {});

/// Three-scale variant over the (z, y, x) grid. The stiff blocks use the
/// exact affine flow of the frozen system for their characteristic feet, so
/// only the slow axes are CFL-constrained.
GridValueFunction solve_hjb_full(const ThreeScaleSystem& sys, const CostSpec& cost,
                                 const Grid& grid_zyx, Index steps,
                                 const HjbOptions& opts = {});

/// Macro HJB of the cascaded reduction: Hamiltonian
/// -p.C1 + sup_alpha{-p.B1 alpha} + lambda1 + lambda2, marched through the
/// macro reduced drift (vertex search is exact in the affine case).
GridValueFunction solve_hjb_multiscale_effective(const ThreeScaleSystem& sys3,
                                                 const CostSpec& cost, const Grid& grid,
                                                 Index steps, const HjbOptions& opts = {});

/// Vanishing-discount solve of the meso cell problem at frozen (z, p):
///   delta w + sup_beta{ -(A2 y + B2 beta + C2) . dw } - p.A1 y = 0,
/// periodic on the fast grid; lambda = -delta * w(reference node).
CellResult solve_cell(const TwoScaleSystem& sys, const Vec& z, const Vec& p,
                      const Grid& fast_grid, double delta,
                      const CellOptions& opts = {});

/// Micro cell problem: (A3, B3, C3, A0) in place of (A2, B2, C2, A1).
CellResult solve_micro_cell(const ThreeScaleSystem& sys, const Vec& z, const Vec& p,
                            const Grid& fast_grid, double delta,
                            const CellOptions& opts = {});

struct ExpansionReport {
    double epsilon = 0.0;
    double r_sup = 0.0;             // sup |V_eps - V0 - eps V1|
    double eps_squared = 0.0;
    double sup_diff = 0.0;          // sup |V_eps - V0|
    Vec per_slow_node_r;            // R restricted to each slow node
};

/// First-order expansion diagnostic: the full grid must be the product of the
/// effective grid and the cell's fast grid, with matching recorded times.
ExpansionReport expansion_check(const GridValueFunction& full,
                                const GridValueFunction& effective,
                                const CellResult& cell, double epsilon);

}  // namespace relax
