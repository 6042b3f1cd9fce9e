// Command-line driver: model registry, trajectory/value sweeps, cell-problem
// validation, occupational measures and static plots.

#include "relax/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace relax;

struct CliFlags {
    std::string out_dir;
    long jobs = 0;
    unsigned long long seed = 0;
    bool seed_set = false;
    long budget_nodes = 0;
};

ExperimentConfig load_config(const std::string& path, const CliFlags& flags) {
    ExperimentConfig cfg = ExperimentConfig::from_json_file(path);
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.jobs > 0) cfg.jobs = flags.jobs;
    if (flags.seed_set) cfg.seed = flags.seed;
    if (flags.budget_nodes > 0) cfg.node_budget = flags.budget_nodes;
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

std::string table_path(const ExperimentConfig& cfg, const std::string& kind) {
    return cfg.out_dir + "/" + cfg.name + "_" + kind + ".csv";
}

void cmd_models_list() {
    for (const auto& name : model_registry_names()) std::cout << name << "\n";
}

void cmd_simulate(const ExperimentConfig& cfg) {
    std::vector<double> eps_list = cfg.epsilons;
    if (eps_list.empty()) eps_list.push_back(cfg.build_model(1e-2).epsilon());
    for (size_t i = 0; i < eps_list.size(); ++i) {
        ModelInstance model = cfg.build_model(eps_list[i]);
        IntegrateOptions opts;
        opts.layout = model.layout;
        Trajectory traj;
        if (model.three_scale()) {
            const auto& sys = model.three();
            traj = integrate_three_scale(
                sys, cfg.signal_for(sys.omega_A, 'a', cfg.horizon),
                cfg.signal_for(sys.omega_B, 'b', cfg.horizon),
                cfg.signal_for(sys.omega_G, 'g', cfg.horizon), model.initial_slow,
                model.initial_meso, model.initial_micro, cfg.steps, opts);
        } else {
            const auto& sys = model.two();
            traj = integrate_stiff(sys, cfg.signal_for(sys.omega_A, 'a', cfg.horizon),
                                   cfg.signal_for(sys.omega_B, 'b', cfg.horizon),
                                   model.initial_slow, model.initial_meso, cfg.steps,
                                   opts);
        }
        if (traj.bounds_warning_step)
            std::cerr << "warning: BoundsExceeded at step " << *traj.bounds_warning_step
                      << "\n";
        const std::string path =
            cfg.out_dir + "/" + cfg.name + "_traj_eps" + std::to_string(i) + ".csv";
        write_trajectory_csv(traj, path);
        std::cout << path << "\n";
    }
}

void cmd_reduce(const ExperimentConfig& cfg) {
    ModelInstance model = cfg.build_model(1e-2);
    Trajectory traj;
    IntegrateOptions opts;
    Layout slow;
    for (const auto& s : model.layout.slices)
        if (s.tag == ScaleTag::Slow) slow.slices.push_back(s);
    opts.layout = slow;
    if (model.three_scale()) {
        const auto& sys = model.three();
        CascadeResult cascade = cascade_reduce(sys);
        traj = integrate_reduced(
            cascade.macro,
            stack_signals(cfg.signal_for(sys.omega_A, 'a', cfg.horizon),
                          cfg.signal_for(sys.omega_G, 'g', cfg.horizon)),
            cfg.signal_for(sys.omega_B, 'b', cfg.horizon), model.initial_slow, cfg.steps,
            cfg.horizon, opts);
    } else {
        const auto& sys = model.two();
        traj = integrate_reduced(build_reduced(sys),
                                 cfg.signal_for(sys.omega_A, 'a', cfg.horizon),
                                 cfg.signal_for(sys.omega_B, 'b', cfg.horizon),
                                 model.initial_slow, cfg.steps, cfg.horizon, opts);
    }
    const std::string path = cfg.out_dir + "/" + cfg.name + "_reduced.csv";
    write_trajectory_csv(traj, path);
    std::cout << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"controlled stiff relaxation systems: reductions, HJB solves, sweeps"};
    app.require_subcommand(1);
    app.fallthrough();

    CliFlags flags;
    app.add_option("--out", flags.out_dir, "output directory override");
    app.add_option("--jobs", flags.jobs, "worker threads for sweep points");
    auto* seed_opt = app.add_option("--seed", flags.seed, "seed override");
    app.add_option("--budget-nodes", flags.budget_nodes, "HJB grid node budget");

    auto* models = app.add_subcommand("models", "model registry");
    auto* models_list = models->add_subcommand("list", "list registered models");

    std::string config_path;
    auto* simulate = app.add_subcommand("simulate", "integrate the stiff system");
    simulate->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* reduce = app.add_subcommand("reduce", "integrate the reduced system");
    reduce->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* sweep_traj =
        app.add_subcommand("sweep-trajectory", "stiff vs reduced deviation per epsilon");
    sweep_traj->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* sweep_value =
        app.add_subcommand("sweep-value", "full vs effective HJB per epsilon");
    sweep_value->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* cell = app.add_subcommand("cell", "cell-problem oracle validation");
    cell->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* occ = app.add_subcommand("occmeasure", "occupational measure histogram");
    occ->add_option("config", config_path, "experiment config (JSON)")->required();

    std::vector<std::string> plot_tables;
    auto* plot = app.add_subcommand("plot", "emit SVG plots from CSV tables");
    plot->add_option("tables", plot_tables, "CSV tables")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }
    flags.seed_set = seed_opt->count() > 0;

    try {
        if (models_list->parsed()) {
            cmd_models_list();
        } else if (simulate->parsed()) {
            cmd_simulate(load_config(config_path, flags));
        } else if (reduce->parsed()) {
            cmd_reduce(load_config(config_path, flags));
        } else if (sweep_traj->parsed()) {
            ExperimentConfig cfg = load_config(config_path, flags);
            CsvTable table = run_trajectory_sweep(cfg);
            table.write(table_path(cfg, "trajectory_sweep"));
            std::cout << table_path(cfg, "trajectory_sweep") << "\n";
        } else if (sweep_value->parsed()) {
            ExperimentConfig cfg = load_config(config_path, flags);
            CsvTable table = run_value_sweep(cfg);
            table.write(table_path(cfg, "value_sweep"));
            std::cout << table_path(cfg, "value_sweep") << "\n";
        } else if (cell->parsed()) {
            ExperimentConfig cfg = load_config(config_path, flags);
            CsvTable table = run_cell_validation(cfg);
            table.write(table_path(cfg, "cell"));
            std::cout << table_path(cfg, "cell") << "\n";
        } else if (occ->parsed()) {
            ExperimentConfig cfg = load_config(config_path, flags);
            OccupationalHistogram hist;
            CsvTable table = run_occupation(cfg, &hist);
            table.write(table_path(cfg, "occupation"));
            std::cout << table_path(cfg, "occupation") << "\n";
            std::cout << "mass_within_3_bins=" << format_full(hist.mass_near_equilibrium(3))
                      << "\n";
        } else if (plot->parsed()) {
            const std::string out = flags.out_dir.empty() ? "." : flags.out_dir;
            std::filesystem::create_directories(out);
            for (const auto& file : emit_plots(plot_tables, out))
                std::cout << file << "\n";
        }
    } catch (const relax::ConfigError& e) {
        std::cerr << e.name() << ": " << e.what() << "\n";
        return 2;
    } catch (const relax::Error& e) {
        std::cerr << e.name() << ": " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "Error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
