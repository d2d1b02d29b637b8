#include <benchmark/benchmark.h>

#include "hfpk/assembly.hpp"
#include "hfpk/chain.hpp"
#include "hfpk/montecarlo.hpp"

using namespace hfpk;

namespace {

// range(0): cells per unit of the desk spacing (1 = desk, 2 = twice as fine)
MeshSpec spec_for(int refine) {
    MeshSpec s;
    s.dtheta = 0.002 / refine;
    s.domega = 0.0008 / refine;
    return s;
}

const ModelParams kParams = ModelParams::defaults();

}  // namespace

static void BM_BuildMesh(benchmark::State& state) {
    const MeshSpec s = spec_for(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(build_mesh(s, kParams.a));
}
BENCHMARK(BM_BuildMesh)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_Assemble(benchmark::State& state) {
    const Mesh m = build_mesh(spec_for(static_cast<int>(state.range(0))), kParams.a);
    const SystemMatrices sys = derive_system(kParams);
    for (auto _ : state) benchmark::DoNotOptimize(assemble(m, sys, 1e-4));
    state.counters["nodes"] = m.grid_count();
}
BENCHMARK(BM_Assemble)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_TransitionApply(benchmark::State& state) {
    const Mesh m = build_mesh(spec_for(1), kParams.a);
    const bool lumped = state.range(0) != 0;
    const AssembledSystem sys = assemble(m, derive_system(kParams), 1e-4, lumped);
    const TransitionOperator op(sys);
    Eigen::VectorXd p = gaussian_initial(m, op.weights(), {0.01, 0.0}, {0.004, 0.0016}).values, q;
    for (auto _ : state) {
        op.apply(p, q);
        p.swap(q);
    }
    state.SetLabel(lumped ? "lumped" : "consistent");
}
BENCHMARK(BM_TransitionApply)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_Stationary(benchmark::State& state) {
    const Mesh m = build_mesh(spec_for(1), kParams.a);
    const AssembledSystem sys = assemble(m, derive_system(kParams), 1e-4);
    for (auto _ : state) benchmark::DoNotOptimize(stationary(sys));
}
BENCHMARK(BM_Stationary)->Unit(benchmark::kMillisecond);

static void BM_McPaths(benchmark::State& state) {
    McConfig c;
    c.paths = 1;
    c.T = 10.0;
    c.dt = 1e-3;
    const McModel model = state.range(0) ? McModel::Sdde : McModel::Sode;
    long k = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(model == McModel::Sode ? simulate_sode(kParams, c, k++) : simulate_sdde(kParams, c, k++));
    state.SetItemsProcessed(state.iterations() * c.steps());
    state.SetLabel(model == McModel::Sode ? "sode" : "sdde");
}
BENCHMARK(BM_McPaths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
