#include "relax/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace relax {

using nlohmann::json;

namespace {

void parallel_indexed(Index count, Index jobs, const std::function<void(Index)>& body) {
    jobs = std::max<Index>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (Index i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (Index t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

Vec to_vec(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ConfigError(where + " must be an array");
    Vec v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i].get<double>();
    return v;
}

GridAxis to_axis(const json& obj, const std::string& where) {
    check_keys(obj, {"lower", "upper", "nodes"}, where);
    GridAxis ax;
    ax.lower = obj.at("lower").get<double>();
    ax.upper = obj.at("upper").get<double>();
    ax.count = obj.at("nodes").get<Index>();
    return ax;
}

std::vector<Vec> to_value_list(const json& obj, const std::string& where) {
    check_keys(obj, {"values"}, where);
    std::vector<Vec> values;
    for (const auto& row : obj.at("values")) values.push_back(to_vec(row, where));
    return values;
}

double taper_factor(double z, double radius) {
    const double s = z / radius;
    return std::max(0.0, 1.0 - s * s);
}

}  // namespace

Index CsvTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<Index>(i);
    throw IoError("CsvTable: no column '" + name + "'");
}

void CsvTable::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    for (size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            if (!std::isnan(row[i])) out << format_full(row[i]);
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

CsvTable CsvTable::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file " + path);
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ','))
            row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : std::stod(cell));
        while (row.size() < table.columns.size())
            row.push_back(std::numeric_limits<double>::quiet_NaN());
        table.rows.push_back(std::move(row));
    }
    return table;
}

TwoScaleSystem make_affine_instance(const AffineInstanceParams& p) {
    TwoScaleSystem sys;
    sys.m = sys.n = sys.p = sys.q = 1;
    sys.epsilon = p.epsilon;
    sys.omega_A = ControlBox::symmetric(1, p.alpha_halfwidth);
    sys.omega_B = ControlBox::symmetric(1, p.beta_halfwidth);
    const double radius = p.taper_radius;
    auto chi = [taper = p.taper, radius](const Vec& z) {
        return taper ? taper_factor(z[0], radius) : 1.0;
    };
    sys.A1 = MatrixField(1, 1, [a1 = p.a1, chi](const Vec& z) {
        return Mat(Mat::Constant(1, 1, a1 * chi(z)));
    });
    sys.B1 = MatrixField(1, 1, [b1 = p.b1, chi](const Vec& z) {
        return Mat(Mat::Constant(1, 1, b1 * chi(z)));
    });
    sys.C1 = MatrixField(1, 1, [c1 = p.c1, chi](const Vec& z) {
        return Mat(Mat::Constant(1, 1, c1 * chi(z)));
    });
    sys.A2 = MatrixField::constant(Mat::Constant(1, 1, p.a2));
    sys.B2 = MatrixField::constant(Mat::Constant(1, 1, p.b2));
    sys.C2 = MatrixField::constant(Mat::Constant(1, 1, p.c2));
    sys.validate();
    return sys;
}

ThreeScaleSystem make_three_scale_instance(const ThreeScaleInstanceParams& p) {
    ThreeScaleSystem sys;
    sys.m = sys.n = sys.l = sys.p = sys.q = sys.r = 1;
    sys.epsilon = p.epsilon;
    sys.omega_A = ControlBox::symmetric(1, p.alpha_halfwidth);
    sys.omega_B = ControlBox::symmetric(1, p.beta_halfwidth);
    sys.omega_G = ControlBox::symmetric(1, p.gamma_halfwidth);
    const double radius = p.taper_radius;
    auto chi = [taper = p.taper, radius](const Vec& z) {
        return taper ? taper_factor(z[0], radius) : 1.0;
    };
    auto tapered = [chi](double v) {
        return MatrixField(1, 1, [v, chi](const Vec& z) {
            return Mat(Mat::Constant(1, 1, v * chi(z)));
        });
    };
    sys.A0 = tapered(p.a0);
    sys.A1 = tapered(p.a1);
    sys.B1 = tapered(p.b1);
    sys.C1 = tapered(p.c1);
    sys.A2 = MatrixField::constant(Mat::Constant(1, 1, p.a2));
    sys.B2 = MatrixField::constant(Mat::Constant(1, 1, p.b2));
    sys.C2 = MatrixField::constant(Mat::Constant(1, 1, p.c2));
    sys.A3 = MatrixField::constant(Mat::Constant(1, 1, p.a3));
    sys.B3 = MatrixField::constant(Mat::Constant(1, 1, p.b3));
    sys.C3 = MatrixField::constant(Mat::Constant(1, 1, p.c3));
    sys.validate();
    return sys;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    try {
        check_keys(doc,
                   {"name", "seed", "out_dir", "jobs", "record_timing", "model",
                    "instance", "three_scale_instance", "horizon", "steps", "epsilons",
                    "deltas", "controls", "grid", "cost", "cell", "occupation",
                    "budget_nodes", "cfl_multiplier"},
                   "config");
        ExperimentConfig cfg;
        cfg.name = doc.at("name").get<std::string>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
        if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<Index>();
        if (doc.contains("record_timing")) cfg.record_timing = doc["record_timing"].get<bool>();
        if (doc.contains("horizon")) cfg.horizon = doc["horizon"].get<double>();
        if (doc.contains("steps")) cfg.steps = doc["steps"].get<Index>();
        if (doc.contains("budget_nodes")) cfg.node_budget = doc["budget_nodes"].get<Index>();
        if (doc.contains("cfl_multiplier"))
            cfg.cfl_multiplier = doc["cfl_multiplier"].get<double>();

        if (doc.contains("model")) {
            check_keys(doc["model"], {"name", "params"}, "model");
            cfg.model_name = doc["model"].at("name").get<std::string>();
            if (doc["model"].contains("params"))
                for (auto it = doc["model"]["params"].begin();
                     it != doc["model"]["params"].end(); ++it)
                    cfg.model_params[it.key()] = it.value().get<double>();
        }
        if (doc.contains("instance")) {
            const json& inst = doc["instance"];
            check_keys(inst,
                       {"a1", "a2", "b1", "b2", "c1", "c2", "alpha_halfwidth",
                        "beta_halfwidth", "epsilon", "taper", "taper_radius"},
                       "instance");
            cfg.has_affine_instance = true;
            auto& a = cfg.affine;
            if (inst.contains("a1")) a.a1 = inst["a1"].get<double>();
            if (inst.contains("a2")) a.a2 = inst["a2"].get<double>();
            if (inst.contains("b1")) a.b1 = inst["b1"].get<double>();
            if (inst.contains("b2")) a.b2 = inst["b2"].get<double>();
            if (inst.contains("c1")) a.c1 = inst["c1"].get<double>();
            if (inst.contains("c2")) a.c2 = inst["c2"].get<double>();
            if (inst.contains("alpha_halfwidth"))
                a.alpha_halfwidth = inst["alpha_halfwidth"].get<double>();
            if (inst.contains("beta_halfwidth"))
                a.beta_halfwidth = inst["beta_halfwidth"].get<double>();
            if (inst.contains("epsilon")) a.epsilon = inst["epsilon"].get<double>();
            if (inst.contains("taper")) a.taper = inst["taper"].get<bool>();
            if (inst.contains("taper_radius"))
                a.taper_radius = inst["taper_radius"].get<double>();
        }
        if (doc.contains("three_scale_instance")) {
            const json& inst = doc["three_scale_instance"];
            check_keys(inst,
                       {"a0", "a1", "a2", "a3", "b1", "b2", "b3", "c1", "c2", "c3",
                        "alpha_halfwidth", "beta_halfwidth", "gamma_halfwidth", "epsilon",
                        "taper", "taper_radius"},
                       "three_scale_instance");
            cfg.has_three_scale_instance = true;
            auto& t = cfg.three_scale;
            auto grab = [&inst](const char* key, double& slot) {
                if (inst.contains(key)) slot = inst[key].get<double>();
            };
            grab("a0", t.a0); grab("a1", t.a1); grab("a2", t.a2); grab("a3", t.a3);
            grab("b1", t.b1); grab("b2", t.b2); grab("b3", t.b3);
            grab("c1", t.c1); grab("c2", t.c2); grab("c3", t.c3);
            grab("alpha_halfwidth", t.alpha_halfwidth);
            grab("beta_halfwidth", t.beta_halfwidth);
            grab("gamma_halfwidth", t.gamma_halfwidth);
            grab("epsilon", t.epsilon);
            if (inst.contains("taper")) t.taper = inst["taper"].get<bool>();
            grab("taper_radius", t.taper_radius);
        }
        if (doc.contains("epsilons")) {
            for (const auto& e : doc["epsilons"]) cfg.epsilons.push_back(e.get<double>());
            if (cfg.epsilons.empty()) throw ConfigError("epsilons must be non-empty");
            for (size_t i = 0; i < cfg.epsilons.size(); ++i) {
                if (!(cfg.epsilons[i] > 0.0))
                    throw ConfigError("epsilons must be strictly positive");
                if (i > 0 && !(cfg.epsilons[i] < cfg.epsilons[i - 1]))
                    throw ConfigError("epsilons must be strictly decreasing");
            }
        }
        if (doc.contains("deltas")) {
            for (const auto& e : doc["deltas"]) cfg.deltas.push_back(e.get<double>());
            for (double d : cfg.deltas)
                if (!(d > 0.0 && d < 1.0)) throw ConfigError("deltas must lie in (0, 1)");
        }
        if (doc.contains("controls")) {
            check_keys(doc["controls"], {"alpha", "beta", "gamma"}, "controls");
            if (doc["controls"].contains("alpha"))
                cfg.alpha_values = to_value_list(doc["controls"]["alpha"], "controls.alpha");
            if (doc["controls"].contains("beta"))
                cfg.beta_values = to_value_list(doc["controls"]["beta"], "controls.beta");
            if (doc["controls"].contains("gamma"))
                cfg.gamma_values = to_value_list(doc["controls"]["gamma"], "controls.gamma");
        }
        if (doc.contains("grid")) {
            check_keys(doc["grid"], {"slow", "fast", "micro"}, "grid");
            if (doc["grid"].contains("slow"))
                cfg.slow_axis = to_axis(doc["grid"]["slow"], "grid.slow");
            if (doc["grid"].contains("fast"))
                cfg.fast_axis = to_axis(doc["grid"]["fast"], "grid.fast");
            if (doc["grid"].contains("micro"))
                cfg.micro_axis = to_axis(doc["grid"]["micro"], "grid.micro");
        }
        if (doc.contains("cost")) {
            check_keys(doc["cost"], {"terminal", "running_scale"}, "cost");
            if (doc["cost"].contains("terminal"))
                cfg.terminal_kind = doc["cost"]["terminal"].get<std::string>();
            if (doc["cost"].contains("running_scale"))
                cfg.running_scale = doc["cost"]["running_scale"].get<double>();
        }
        if (doc.contains("cell")) {
            check_keys(doc["cell"], {"z", "p", "dt_factor"}, "cell");
            if (doc["cell"].contains("z")) cfg.cell_z = to_vec(doc["cell"]["z"], "cell.z");
            if (doc["cell"].contains("p")) cfg.cell_p = to_vec(doc["cell"]["p"], "cell.p");
            if (doc["cell"].contains("dt_factor"))
                cfg.cell_dt_factor = doc["cell"]["dt_factor"].get<double>();
        }
        if (doc.contains("occupation")) {
            const json& occ = doc["occupation"];
            check_keys(occ, {"z", "beta", "y0", "horizon", "bins", "box"}, "occupation");
            if (occ.contains("z")) cfg.occ_z = to_vec(occ["z"], "occupation.z");
            if (occ.contains("beta")) cfg.occ_beta = to_vec(occ["beta"], "occupation.beta");
            if (occ.contains("y0")) cfg.occ_y0 = to_vec(occ["y0"], "occupation.y0");
            if (occ.contains("horizon")) cfg.occ_horizon = occ["horizon"].get<double>();
            if (occ.contains("bins")) cfg.occ_bins = occ["bins"].get<Index>();
            if (occ.contains("box")) {
                check_keys(occ["box"], {"lower", "upper"}, "occupation.box");
                cfg.occ_box = ControlBox(to_vec(occ["box"].at("lower"), "occupation.box"),
                                         to_vec(occ["box"].at("upper"), "occupation.box"));
            }
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
}

ModelInstance ExperimentConfig::build_model(double epsilon) const {
    if (model_name.empty()) throw ConfigError("config has no model section");
    auto params = model_params;
    params["epsilon"] = epsilon;
    return make_model(model_name, params);
}

CostSpec ExperimentConfig::build_cost() const {
    CostSpec cost;
    cost.horizon = horizon;
    const double scale = running_scale;
    cost.running = [scale](const Vec& z) { return scale * z.squaredNorm(); };
    if (terminal_kind == "quadratic") {
        cost.terminal = [](const Vec& z) { return z.squaredNorm(); };
    } else if (terminal_kind == "abs") {
        cost.terminal = [](const Vec& z) { return z.cwiseAbs().sum(); };
    } else if (terminal_kind == "cosine") {
        cost.terminal = [](const Vec& z) {
            double v = 0.0;
            for (Index i = 0; i < z.size(); ++i) v += std::cos(M_PI * z[i]);
            return v;
        };
    } else {
        throw ConfigError("unknown terminal cost kind '" + terminal_kind + "'");
    }
    return cost;
}

ControlSignal default_signal(const ControlBox& box, char which, double horizon) {
    const double phase = which == 'a' ? 0.0 : which == 'b' ? 0.7 : 1.9;
    const Vec mid = box.midpoint();
    const Vec hw = box.halfwidth();
    std::vector<Vec> values;
    const int intervals = 4;
    for (int k = 0; k < intervals; ++k) {
        Vec v(box.dim());
        for (Index i = 0; i < box.dim(); ++i)
            v[i] = mid[i] + 0.7 * hw[i] * std::sin(1.3 * double(k + 1) + 2.1 * double(i) + phase);
        values.push_back(v);
    }
    return ControlSignal::switching(values, horizon, box);
}

ControlSignal ExperimentConfig::signal_for(const ControlBox& box, char which,
                                           double horizon_in) const {
    const std::vector<Vec>* values = nullptr;
    if (which == 'a' && !alpha_values.empty()) values = &alpha_values;
    if (which == 'b' && !beta_values.empty()) values = &beta_values;
    if (which == 'g' && !gamma_values.empty()) values = &gamma_values;
    if (!values) return default_signal(box, which, horizon_in);
    return ControlSignal::switching(*values, horizon_in, box);
}

ControlSignal stack_signals(const ControlSignal& a, const ControlSignal& b) {
    std::set<double> merged;
    for (Index i = 0; i < a.breakpoints.size(); ++i) merged.insert(a.breakpoints[i]);
    for (Index i = 0; i < b.breakpoints.size(); ++i) merged.insert(b.breakpoints[i]);
    Vec breaks(static_cast<Index>(merged.size()));
    Index k = 0;
    for (double t : merged) breaks[k++] = t;
    std::vector<Vec> values;
    for (Index i = 0; i + 1 < breaks.size(); ++i) {
        const double t = breaks[i];
        Vec v(a.box.dim() + b.box.dim());
        v << a.value_at(t), b.value_at(t);
        values.push_back(v);
    }
    return ControlSignal(breaks, values, a.box.stacked(b.box));
}

namespace {

Layout slow_only(const Layout& layout) {
    Layout out;
    for (const auto& s : layout.slices)
        if (s.tag == ScaleTag::Slow) out.slices.push_back(s);
    return out;
}

}  // namespace

CsvTable run_trajectory_sweep(const ExperimentConfig& cfg) {
    if (cfg.epsilons.empty()) throw ConfigError("trajectory sweep requires epsilons");
    const ModelInstance probe = cfg.build_model(cfg.epsilons.front());

    std::vector<std::string> slow_slices;
    for (const auto& s : probe.layout.slices)
        if (s.tag == ScaleTag::Slow) slow_slices.push_back(s.name);

    CsvTable table;
    table.columns = {"epsilon", "mu_slow"};
    for (const auto& s : slow_slices) table.columns.push_back("mu_" + s);
    table.columns.push_back("eq_residual_T");
    table.columns.push_back("wall_time_s");
    table.columns.push_back("ratio_mu_slow");
    table.rows.assign(cfg.epsilons.size(),
                      std::vector<double>(table.columns.size(),
                                          std::numeric_limits<double>::quiet_NaN()));

    parallel_indexed(static_cast<Index>(cfg.epsilons.size()), cfg.jobs, [&](Index i) {
        const double eps = cfg.epsilons[static_cast<size_t>(i)];
        const auto start = std::chrono::steady_clock::now();
        ModelInstance model = cfg.build_model(eps);

        Trajectory stiff, reduced;
        ControlSignal beta_signal =
            cfg.signal_for(model.three_scale() ? model.three().omega_B
                                               : model.two().omega_B,
                           'b', cfg.horizon);
        if (model.three_scale()) {
            const auto& sys = model.three();
            ControlSignal alpha = cfg.signal_for(sys.omega_A, 'a', cfg.horizon);
            ControlSignal gamma = cfg.signal_for(sys.omega_G, 'g', cfg.horizon);
            IntegrateOptions opts;
            opts.layout = model.layout;
            stiff = integrate_three_scale(sys, alpha, beta_signal, gamma,
                                          model.initial_slow, model.initial_meso,
                                          model.initial_micro, cfg.steps, opts);
            CascadeResult cascade = cascade_reduce(sys);
            IntegrateOptions ropts;
            ropts.layout = slow_only(model.layout);
            reduced = integrate_reduced(cascade.macro, stack_signals(alpha, gamma),
                                        beta_signal, model.initial_slow, cfg.steps,
                                        cfg.horizon, ropts);
        } else {
            const auto& sys = model.two();
            ControlSignal alpha = cfg.signal_for(sys.omega_A, 'a', cfg.horizon);
            IntegrateOptions opts;
            opts.layout = model.layout;
            stiff = integrate_stiff(sys, alpha, beta_signal, model.initial_slow,
                                    model.initial_meso, cfg.steps, opts);
            IntegrateOptions ropts;
            ropts.layout = slow_only(model.layout);
            reduced = integrate_reduced(build_reduced(sys), alpha, beta_signal,
                                        model.initial_slow, cfg.steps, cfg.horizon, ropts);
        }

        auto& row = table.rows[static_cast<size_t>(i)];
        size_t col = 0;
        row[col++] = eps;
        row[col++] = trajectory_error(stiff, reduced, "slow");
        for (const auto& s : slow_slices)
            row[col++] = trajectory_error(stiff, reduced, s);
        row[col++] = local_equilibrium_residual(
            model, stiff.state_at(stiff.steps()), beta_signal.value_at(cfg.horizon));
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row[col++] = cfg.record_timing ? elapsed : 0.0;
    });

    const Index mu_col = table.column_index("mu_slow");
    const Index ratio_col = table.column_index("ratio_mu_slow");
    for (size_t i = 1; i < table.rows.size(); ++i)
        table.rows[i][ratio_col] = table.rows[i][mu_col] / table.rows[i - 1][mu_col];
    return table;
}

CsvTable run_value_sweep(const ExperimentConfig& cfg) {
    if (!cfg.has_affine_instance)
        throw ConfigError("value sweep requires an affine instance section");
    if (cfg.epsilons.empty()) throw ConfigError("value sweep requires epsilons");
    const CostSpec cost = cfg.build_cost();
    const Grid slow_grid({cfg.slow_axis});
    const Grid full_grid({cfg.slow_axis, cfg.fast_axis});

    CsvTable table;
    table.columns = {"epsilon", "slice_diff", "full_diff", "ratio_slice_diff"};
    table.rows.assign(cfg.epsilons.size(),
                      std::vector<double>(table.columns.size(),
                                          std::numeric_limits<double>::quiet_NaN()));

    parallel_indexed(static_cast<Index>(cfg.epsilons.size()), cfg.jobs, [&](Index i) {
        const double eps = cfg.epsilons[static_cast<size_t>(i)];
        AffineInstanceParams params = cfg.affine;
        params.epsilon = eps;
        TwoScaleSystem sys = make_affine_instance(params);

        // One step size for both solvers, set by the stricter (fast) bound.
        double max_slow = 0.0, max_fast = 0.0;
        const auto controls = sys.omega_A.stacked(sys.omega_B).vertices_and_midpoint();
        for (Index node = 0; node < full_grid.total_nodes(); ++node) {
            const Vec x = full_grid.node(node);
            const Vec z = x.head(1), y = x.tail(1);
            for (const Vec& u : controls) {
                const Vec alpha = u.head(1), beta = u.tail(1);
                max_slow = std::max(max_slow,
                                    std::abs((sys.A1(z) * y + sys.B1(z) * alpha +
                                              sys.C1(z).col(0))[0]));
                max_fast = std::max(max_fast, std::abs(sys.fast_velocity(z, y, beta)[0]));
            }
        }
        double h_allowed = cfg.slow_axis.spacing() / std::max(max_slow, 1e-12);
        h_allowed = std::min(h_allowed, cfg.cfl_multiplier * eps *
                                            cfg.fast_axis.spacing() /
                                            std::max(max_fast, 1e-12));
        const Index steps = std::max<Index>(1, static_cast<Index>(
                                                   std::ceil(cfg.horizon / h_allowed)));

        HjbOptions opts;
        opts.node_budget = cfg.node_budget;
        opts.cfl_multiplier = cfg.cfl_multiplier;
        GridValueFunction veff =
            solve_hjb_effective(build_reduced(sys), cost, slow_grid, steps, opts);
        GridValueFunction vfull = solve_hjb_full(sys, cost, full_grid, steps, opts);

        // Fast-equilibrium slice at the midpoint control.
        const Vec beta_mid = sys.omega_B.midpoint();
        const Grid fast_grid({cfg.fast_axis});
        double slice_diff = 0.0, full_diff = 0.0;
        const Index fast_nodes = cfg.fast_axis.count;
        for (Index iz = 0; iz < slow_grid.total_nodes(); ++iz) {
            const Vec z = slow_grid.node(iz);
            const Vec ystar = solve_static(sys, z, beta_mid);
            Vec fast_values(fast_nodes);
            for (Index iy = 0; iy < fast_nodes; ++iy)
                fast_values[iy] = vfull.final_slice()[iz * fast_nodes + iy];
            const double v_eps = interp_clamped(fast_grid, fast_values, ystar);
            slice_diff = std::max(slice_diff,
                                  std::abs(v_eps - veff.final_slice()[iz]));
            for (Index iy = 0; iy < fast_nodes; ++iy)
                full_diff = std::max(full_diff, std::abs(fast_values[iy] -
                                                         veff.final_slice()[iz]));
        }
        auto& row = table.rows[static_cast<size_t>(i)];
        row[0] = eps;
        row[1] = slice_diff;
        row[2] = full_diff;
    });

    for (size_t i = 1; i < table.rows.size(); ++i)
        table.rows[i][3] = table.rows[i][1] / table.rows[i - 1][1];
    return table;
}

CsvTable run_cell_validation(const ExperimentConfig& cfg) {
    if (!cfg.has_affine_instance)
        throw ConfigError("cell validation requires an affine instance section");
    if (cfg.deltas.empty()) throw ConfigError("cell validation requires deltas");
    TwoScaleSystem sys = make_affine_instance(cfg.affine);
    const Vec z = cfg.cell_z.size() ? cfg.cell_z : Vec(Vec::Zero(1));
    const Vec p = cfg.cell_p.size() ? cfg.cell_p : Vec(Vec::Constant(1, 2.0));
    const double lambda_closed = lambda1_closed_form(sys, z, p);

    CsvTable table;
    table.columns = {"z",     "p",     "lambda_closed_form",  "delta",
                     "lambda_discounted", "relative_gap", "corrector_amplitude"};
    table.rows.assign(cfg.deltas.size(),
                      std::vector<double>(table.columns.size(),
                                          std::numeric_limits<double>::quiet_NaN()));

    parallel_indexed(static_cast<Index>(cfg.deltas.size()), cfg.jobs, [&](Index i) {
        const double delta = cfg.deltas[static_cast<size_t>(i)];
        CellOptions copts;
        copts.dt_factor = cfg.cell_dt_factor;
        CellResult cell = solve_cell(sys, z, p, Grid({cfg.fast_axis}), delta, copts);
        auto& row = table.rows[static_cast<size_t>(i)];
        row[0] = z[0];
        row[1] = p[0];
        row[2] = lambda_closed;
        row[3] = delta;
        row[4] = cell.lambda;
        const double denom = std::abs(lambda_closed) > 1e-12 ? std::abs(lambda_closed) : 1.0;
        row[5] = std::abs(cell.lambda - lambda_closed) / denom;
        row[6] = cell.corrector.cwiseAbs().maxCoeff();
    });
    return table;
}

CsvTable run_occupation(const ExperimentConfig& cfg, OccupationalHistogram* out) {
    TwoScaleSystem sys = cfg.has_affine_instance
                             ? make_affine_instance(cfg.affine)
                             : cfg.build_model(cfg.affine.epsilon).two();
    if (cfg.occ_box.dim() != sys.n)
        throw ConfigError("occupation.box must have the fast dimension");
    const Vec z = cfg.occ_z.size() ? cfg.occ_z : Vec(Vec::Zero(sys.m));
    const Vec beta = cfg.occ_beta.size() ? cfg.occ_beta : sys.omega_B.midpoint();
    const Vec y0 = cfg.occ_y0.size() ? cfg.occ_y0 : Vec(Vec::Zero(sys.n));

    OccupationOptions oopts;
    oopts.bins_per_axis = cfg.occ_bins;
    OccupationalHistogram hist = estimate_occupational_measure(
        sys, z, beta, y0, cfg.occ_horizon, cfg.occ_box, oopts);
    if (out) *out = hist;

    CsvTable table;
    table.columns = {"bin"};
    for (Index d = 0; d < hist.box.dim(); ++d)
        table.columns.push_back("center_" + std::to_string(d));
    table.columns.push_back("mass");
    for (Index b = 0; b < hist.counts.size(); ++b) {
        std::vector<double> row;
        row.push_back(double(b));
        Index rest = b;
        std::vector<Index> multi(hist.box.dim());
        for (Index d = hist.box.dim(); d-- > 0;) {
            multi[d] = rest % hist.box.axes[d].count;
            rest /= hist.box.axes[d].count;
        }
        for (Index d = 0; d < hist.box.dim(); ++d) {
            const auto& ax = hist.box.axes[d];
            const double width = (ax.upper - ax.lower) / double(ax.count);
            row.push_back(ax.lower + (double(multi[d]) + 0.5) * width);
        }
        row.push_back(hist.counts[b]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::string svg_polyline_plot(const std::string& title, const std::vector<double>& xs,
                              const std::vector<double>& ys) {
    const double width = 640, height = 480, margin = 60;
    bool log_ok = true;
    for (size_t i = 0; i < xs.size(); ++i)
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) log_ok = false;
    auto tx = [log_ok](double v) { return log_ok ? std::log10(v) : v; };

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (size_t i = 0; i < xs.size(); ++i) {
        xmin = std::min(xmin, tx(xs[i]));
        xmax = std::max(xmax, tx(xs[i]));
        ymin = std::min(ymin, tx(ys[i]));
        ymax = std::max(ymax, tx(ys[i]));
    }
    if (xmax - xmin < 1e-12) { xmax += 0.5; xmin -= 0.5; }
    if (ymax - ymin < 1e-12) { ymax += 0.5; ymin -= 0.5; }
    auto px = [&](double v) {
        return margin + (tx(v) - xmin) / (xmax - xmin) * (width - 2 * margin);
    };
    auto py = [&](double v) {
        return height - margin - (tx(v) - ymin) / (ymax - ymin) * (height - 2 * margin);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"monospace\" font-size=\"14\">"
        << title << (log_ok ? " (log-log)" : "") << "</text>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < xs.size(); ++i)
        svg << px(xs[i]) << "," << py(ys[i]) << " ";
    svg << "\"/>\n";
    for (size_t i = 0; i < xs.size(); ++i) {
        svg << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i])
            << "\" r=\"3\" fill=\"steelblue\"/>\n";
        char label[64];
        std::snprintf(label, sizeof(label), "%.3g", ys[i]);
        svg << "<text x=\"" << px(xs[i]) + 5 << "\" y=\"" << py(ys[i]) - 5
            << "\" font-family=\"monospace\" font-size=\"10\">" << label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string svg_heatmap(const CsvTable& table) {
    // 1-D strips and 2-D grids share the encoding: mass -> gray level.
    const Index mass_col = table.column_index("mass");
    double max_mass = 0.0;
    for (const auto& row : table.rows) max_mass = std::max(max_mass, row[mass_col]);
    if (max_mass <= 0.0) max_mass = 1.0;

    const bool two_d =
        std::find(table.columns.begin(), table.columns.end(), "center_1") !=
        table.columns.end();
    const Index n = static_cast<Index>(table.rows.size());
    const Index side = two_d ? static_cast<Index>(std::round(std::sqrt(double(n)))) : n;

    const double cell = two_d ? 480.0 / double(side) : 600.0 / double(side);
    const double width = two_d ? 480 + 40 : 640;
    const double height = two_d ? 480 + 40 : 120;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (Index i = 0; i < n; ++i) {
        const double mass = table.rows[static_cast<size_t>(i)][mass_col];
        const int shade = 255 - static_cast<int>(std::round(235.0 * mass / max_mass));
        const Index ix = two_d ? i / side : i;
        const Index iy = two_d ? i % side : 0;
        svg << "<rect x=\"" << 20 + double(ix) * cell << "\" y=\""
            << 20 + double(iy) * cell << "\" width=\"" << cell << "\" height=\""
            << (two_d ? cell : 80.0) << "\" fill=\"rgb(" << shade << "," << shade
            << ",255)\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string stem_of(const std::string& path) {
    const size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const size_t dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

std::vector<std::string> emit_plots(const std::vector<std::string>& table_paths,
                                    const std::string& out_dir) {
    std::vector<std::string> produced;
    for (const auto& path : table_paths) {
        CsvTable table = CsvTable::read(path);
        if (table.empty()) {
            std::cerr << "warning: table " << path << " has no rows, no plot emitted\n";
            continue;
        }
        const std::string stem = stem_of(path);

        const bool has_bin =
            std::find(table.columns.begin(), table.columns.end(), "bin") !=
            table.columns.end();
        if (has_bin) {
            const std::string file = out_dir + "/" + stem + "_heatmap.svg";
            std::ofstream out(file);
            if (!out) throw IoError("cannot open " + file);
            out << svg_heatmap(table);
            produced.push_back(file);
            continue;
        }

        std::string x_col;
        for (const char* candidate : {"epsilon", "delta"})
            if (std::find(table.columns.begin(), table.columns.end(), candidate) !=
                table.columns.end())
                x_col = candidate;
        if (x_col.empty()) {
            std::cerr << "warning: table " << path << " has no epsilon/delta column\n";
            continue;
        }
        const Index xi = table.column_index(x_col);
        for (size_t c = 0; c < table.columns.size(); ++c) {
            const std::string& metric = table.columns[c];
            if (metric == x_col || metric == "wall_time_s" || metric == "z" ||
                metric == "p")
                continue;
            std::vector<double> xs, ys;
            for (const auto& row : table.rows) {
                if (std::isnan(row[c]) || std::isnan(row[xi])) continue;
                xs.push_back(row[xi]);
                ys.push_back(row[c]);
            }
            if (xs.empty()) continue;
            const std::string file = out_dir + "/" + stem + "_" + metric + ".svg";
            std::ofstream out(file);
            if (!out) throw IoError("cannot open " + file);
            out << svg_polyline_plot(stem + ": " + metric + " vs " + x_col, xs, ys);
            produced.push_back(file);
        }
    }
    return produced;
}

}  // namespace relax
