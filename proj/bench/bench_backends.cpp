#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

#include "tclpop/fvm.hpp"
#include "tclpop/grid.hpp"
#include "tclpop/mc.hpp"

using namespace tclpop;

namespace {

Ensemble make_ensemble(int n) {
    TclParams p = TclParams::fridge();
    InitialCondition init;
    init.edges = {2.0, 3.0, 4.0, 5.0};
    init.mass0 = {0.3, 0.3, 0.3};
    init.mass1 = {0.04, 0.03, 0.03};
    return sample_ensemble(init, p, n, 0xbe7c5);
}

void bench_ensemble_serial(benchmark::State& state) {
    Ensemble e = make_ensemble(static_cast<int>(state.range(0)));
    StepFlags flags;
    flags.dwell_enabled = true;
    for (auto _ : state) {
        long on = step_ensemble_serial(e, {0.003, 0.008}, flags);
        benchmark::DoNotOptimize(on);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bench_ensemble_parallel(benchmark::State& state) {
    Ensemble e = make_ensemble(static_cast<int>(state.range(0)));
    StepFlags flags;
    flags.dwell_enabled = true;
    for (auto _ : state) {
        long on = step_ensemble_parallel(e, {0.003, 0.008}, flags);
        benchmark::DoNotOptimize(on);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bench_apply_serial(benchmark::State& state) {
    TclParams p = TclParams::fridge();
    HybridGrid g = build_grid(p, 1.0, 1.0, static_cast<int>(state.range(0)));
    BilinearModel m = assemble_operators(g, p);
    RowSparseOp op = combined_operator(m, {0.003, 0.008});
    Eigen::VectorXd x = Eigen::VectorXd::Constant(m.size(), 1.0 / m.size());
    Eigen::VectorXd y;
    for (auto _ : state) {
        apply_rowmajor_serial(op, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * op.nonZeros());
}

void bench_apply_parallel(benchmark::State& state) {
    TclParams p = TclParams::fridge();
    HybridGrid g = build_grid(p, 1.0, 1.0, static_cast<int>(state.range(0)));
    BilinearModel m = assemble_operators(g, p);
    RowSparseOp op = combined_operator(m, {0.003, 0.008});
    Eigen::VectorXd x = Eigen::VectorXd::Constant(m.size(), 1.0 / m.size());
    Eigen::VectorXd y;
    for (auto _ : state) {
        apply_rowmajor_parallel(op, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * op.nonZeros());
}

} // namespace

BENCHMARK(bench_ensemble_serial)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_ensemble_parallel)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_apply_serial)->Arg(120)->Arg(480)->Arg(1920)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_apply_parallel)->Arg(120)->Arg(480)->Arg(1920)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
