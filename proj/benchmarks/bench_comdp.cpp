#include <benchmark/benchmark.h>

#include "comdp/affine.hpp"
#include "comdp/exact.hpp"
#include "comdp/mdp.hpp"
#include "comdp/problems.hpp"

using namespace comdp;

static void BM_BuildKsp(benchmark::State& state) {
    Instance inst{generate_ksp(int(state.range(0)), 7)};
    for (auto _ : state) {
        Mdp mdp = build_mdp(inst);
        benchmark::DoNotOptimize(mdp.state_count());
    }
}
BENCHMARK(BM_BuildKsp)->Arg(10)->Arg(14)->Arg(18);

static void BM_BuildTsp(benchmark::State& state) {
    Instance inst{generate_tsp(int(state.range(0)), 7)};
    for (auto _ : state) {
        Mdp mdp = build_mdp(inst);
        benchmark::DoNotOptimize(mdp.state_count());
    }
}
BENCHMARK(BM_BuildTsp)->Arg(8)->Arg(10)->Arg(12);

static void BM_BellmanSweep(benchmark::State& state) {
    Mdp mdp = build_mdp(Instance{generate_tsp(int(state.range(0)), 7)});
    ValueFunction v = ValueFunction::zeros(mdp);
    for (auto _ : state) {
        v = bellman_apply(mdp, v);
        benchmark::DoNotOptimize(v.values.data());
    }
}
BENCHMARK(BM_BellmanSweep)->Arg(8)->Arg(10)->Arg(12);

static void BM_ValueIteration(benchmark::State& state) {
    Mdp mdp = build_mdp(Instance{generate_tsp(int(state.range(0)), 7)});
    for (auto _ : state) {
        ViResult vi = value_iteration(mdp, ValueFunction::zeros(mdp));
        benchmark::DoNotOptimize(vi.vstar.values.data());
    }
}
BENCHMARK(BM_ValueIteration)->Arg(8)->Arg(10);

static void BM_PviIteration(benchmark::State& state) {
    Mdp mdp = build_mdp(Instance{generate_tsp(8, 7)});
    Scenario sc = sample_scenario(mdp, int(state.range(0)), 3);
    Projector projector(mdp, sc.scheme, sc.sigma);
    ValueFunction v = sc.scheme.value_of(sc.theta0);
    for (auto _ : state) {
        Projection next = projector.apply(bellman_apply(mdp, v));
        v = next.v;
        benchmark::DoNotOptimize(v.values.data());
    }
}
BENCHMARK(BM_PviIteration)->Arg(4)->Arg(8);

static void BM_BruteForceKsp(benchmark::State& state) {
    Instance inst{generate_ksp(int(state.range(0)), 7)};
    for (auto _ : state) {
        Solution sol = brute_force_optimum(inst);
        benchmark::DoNotOptimize(sol.objective);
    }
}
BENCHMARK(BM_BruteForceKsp)->Arg(8)->Arg(10)->Arg(12);

BENCHMARK_MAIN();
