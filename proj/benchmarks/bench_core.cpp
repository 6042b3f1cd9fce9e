#include "relax/experiment.hpp"

#include <benchmark/benchmark.h>

using namespace relax;

namespace {

void BM_box_sup(benchmark::State& state) {
    const Index dim = state.range(0);
    ControlBox box = ControlBox::symmetric(dim, 1.0);
    Vec c(dim);
    for (Index i = 0; i < dim; ++i) c[i] = std::sin(double(i) + 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(box_sup(c, box).value);
}
BENCHMARK(BM_box_sup)->Arg(2)->Arg(16)->Arg(256);

void BM_solve_static_jinxin(benchmark::State& state) {
    ModelInstance model = make_model("jin-xin-2", {{"d", double(state.range(0))}});
    const auto& sys = model.two();
    const Vec z = model.initial_slow;
    const Vec beta = sys.omega_B.midpoint();
    for (auto _ : state) benchmark::DoNotOptimize(solve_static(sys, z, beta));
}
BENCHMARK(BM_solve_static_jinxin)->Arg(16)->Arg(64);

void BM_integrate_stiff_jinxin(benchmark::State& state) {
    ModelInstance model = make_model("jin-xin-2", {{"epsilon", 1e-3}});
    const auto& sys = model.two();
    ControlSignal alpha = default_signal(sys.omega_A, 'a', 1.0);
    ControlSignal beta = default_signal(sys.omega_B, 'b', 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(integrate_stiff(sys, alpha, beta, model.initial_slow,
                                                 model.initial_meso, state.range(0)));
}
BENCHMARK(BM_integrate_stiff_jinxin)->Arg(100)->Arg(1000);

void BM_hjb_effective(benchmark::State& state) {
    AffineInstanceParams params;
    TwoScaleSystem sys = make_affine_instance(params);
    CostSpec cost;
    cost.horizon = 1.0;
    cost.running = [](const Vec& z) { return z.squaredNorm(); };
    cost.terminal = [](const Vec& z) { return z.squaredNorm(); };
    Grid grid({GridAxis{-1.0, 1.0, state.range(0)}});
    ReducedSystem red = build_reduced(sys);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_hjb_effective(red, cost, grid, 200));
}
BENCHMARK(BM_hjb_effective)->Arg(101)->Arg(401);

void BM_cell_sweeps(benchmark::State& state) {
    AffineInstanceParams params;
    TwoScaleSystem sys = make_affine_instance(params);
    Grid fast({GridAxis{-2.0, 2.0, state.range(0)}});
    CellOptions opts;
    opts.tolerance = 1e-4;  // truncated run, sweep cost is what is measured
    for (auto _ : state)
        benchmark::DoNotOptimize(
            solve_cell(sys, Vec::Zero(1), Vec::Constant(1, 2.0), fast, 1e-3, opts));
}
BENCHMARK(BM_cell_sweeps)->Arg(101)->Arg(201);

}  // namespace

BENCHMARK_MAIN();
