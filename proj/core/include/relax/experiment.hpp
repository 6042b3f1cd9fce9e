#pragma once

#include "relax/hjb.hpp"
#include "relax/integrator.hpp"
#include "relax/model_zoo.hpp"
#include "relax/occupation.hpp"

#include <map>
#include <string>
#include <vector>

namespace relax {

/// Rectangular table with NaN marking empty cells (written as empty fields).
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    bool empty() const { return rows.empty(); }
    Index column_index(const std::string& name) const;
    void write(const std::string& path) const;
    static CsvTable read(const std::string& path);
};

/// Scalar affine benchmark instance (1-D slow, 1-D fast). With `taper` the
/// slow-drift fields vanish outside |z| >= taper_radius so grid truncation is
/// exact for HJB solves.
struct AffineInstanceParams {
    double a1 = 1.0, a2 = -1.0, b1 = 1.0, b2 = 1.0, c1 = 0.0, c2 = 0.0;
    double alpha_halfwidth = 1.0, beta_halfwidth = 1.0;
    double epsilon = 1e-2;
    bool taper = false;
    double taper_radius = 0.9;
};

TwoScaleSystem make_affine_instance(const AffineInstanceParams& params);

/// 1-D-per-scale three-scale instance, same taper convention.
struct ThreeScaleInstanceParams {
    double a0 = 1.0, a1 = 1.0, a2 = -1.0, a3 = -1.0;
    double b1 = 1.0, b2 = 1.0, b3 = 1.0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    double alpha_halfwidth = 1.0, beta_halfwidth = 1.0, gamma_halfwidth = 1.0;
    double epsilon = 1e-2;
    bool taper = false;
    double taper_radius = 0.9;
};

ThreeScaleSystem make_three_scale_instance(const ThreeScaleInstanceParams& params);

struct ExperimentConfig {
    std::string name;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    Index jobs = 1;
    bool record_timing = false;  // timing column written as 0 when false so
                                 // repeated runs stay byte-identical

    // model-driven experiments
    std::string model_name;
    std::map<std::string, double> model_params;

    // instance-driven experiments (value sweeps, cell validation)
    bool has_affine_instance = false;
    AffineInstanceParams affine;
    bool has_three_scale_instance = false;
    ThreeScaleInstanceParams three_scale;

    double horizon = 1.0;
    Index steps = 1000;
    std::vector<double> epsilons;
    std::vector<double> deltas;

    // optional control overrides, switching uniformly over [0, T]
    std::vector<Vec> alpha_values, beta_values, gamma_values;

    // grids
    GridAxis slow_axis{-1.0, 1.0, 101};
    GridAxis fast_axis{-2.0, 2.0, 101};
    GridAxis micro_axis{-2.0, 2.0, 41};
    Index node_budget = 4'000'000;
    double cfl_multiplier = 1.0;

    // cost (value sweeps): running = scale * z^2, terminal per `terminal_kind`
    std::string terminal_kind = "quadratic";  // quadratic | abs | cosine
    double running_scale = 1.0;

    // cell validation
    Vec cell_z, cell_p;
    double cell_dt_factor = 5.0;

    // occupational measure
    Vec occ_z, occ_beta, occ_y0;
    double occ_horizon = 100.0;
    Index occ_bins = 50;
    ControlBox occ_box;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);

    ModelInstance build_model(double epsilon) const;
    CostSpec build_cost() const;
    ControlSignal signal_for(const ControlBox& box, char which, double horizon) const;
};

/// Deterministic switching signal used when a config does not pin controls.
ControlSignal default_signal(const ControlBox& box, char which, double horizon);

/// Stacks two signals into one on the merged breakpoint set.
ControlSignal stack_signals(const ControlSignal& a, const ControlSignal& b);

/// One row per epsilon: trajectory deviation per slow slice between the stiff
/// and reduced runs, equilibrium residual at T, and the deviation ratios.
CsvTable run_trajectory_sweep(const ExperimentConfig& cfg);

/// One row per epsilon: sup-node |V_eps - V0| on the slow grid at the
/// fast-equilibrium slice, and over the full product grid.
CsvTable run_value_sweep(const ExperimentConfig& cfg);

/// One row per delta: closed-form lambda vs vanishing-discount estimate.
CsvTable run_cell_validation(const ExperimentConfig& cfg);

/// Histogram table: one row per bin (index, centre coordinates, mass).
CsvTable run_occupation(const ExperimentConfig& cfg, OccupationalHistogram* out = nullptr);

/// Writes one SVG per metric column; returns the produced file names.
/// Tables without data rows produce a warning on stderr and no file.
std::vector<std::string> emit_plots(const std::vector<std::string>& table_paths,
                                    const std::string& out_dir);

}  // namespace relax
