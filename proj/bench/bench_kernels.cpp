#include <benchmark/benchmark.h>

#include <vector>

#include "condbm/high_low_close.hpp"
#include "condbm/mc_kernels.hpp"

using namespace condbm;

namespace {

SimulationConfig bench_config(std::int64_t paths, bool bridge) {
    SimulationConfig c;
    c.n_paths = paths;
    c.n_steps = 500;
    c.record_stride = 10;
    c.seed = 7;
    c.extremes = bridge ? ExtremeMode::BridgeSampled : ExtremeMode::Discrete;
    return c;
}

template <bool Parallel>
void BM_Summaries(benchmark::State& state) {
    const SimulationConfig c = bench_config(state.range(0), state.range(1) != 0);
    const kernels::GridPlan plan = kernels::make_plan(c);
    std::vector<PathSummary> out(c.n_paths);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::omp::summaries(c, plan, out, nullptr);
        else
            kernels::serial::summaries(c, plan, out, nullptr);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * c.n_paths);
    state.counters["threads"] = Parallel ? kernels::omp::max_threads() : 1;
}

template <bool Parallel>
void BM_Accumulate(benchmark::State& state) {
    const SimulationConfig c = bench_config(state.range(0), false);
    const kernels::GridPlan plan = kernels::make_plan(c);
    std::vector<std::int32_t> bins(c.n_paths);
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] = static_cast<std::int32_t>(i % 1600);
    const std::span<const std::int32_t> assign[] = {bins};
    for (auto _ : state) {
        std::vector<BinAccumulator> acc{BinAccumulator(1600, plan.record_index.size())};
        if constexpr (Parallel)
            kernels::omp::accumulate(c, plan, assign, acc);
        else
            kernels::serial::accumulate(c, plan, assign, acc);
        benchmark::DoNotOptimize(acc[0].sum.data());
    }
    state.SetItemsProcessed(state.iterations() * c.n_paths);
}

void BM_MomentsChl(benchmark::State& state) {
    const HighLowCloseStat s{1.0, -0.8, 0.2};
    const ModelParams p{1.0};
    double t = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(moments_chl(t, s, p));
        t = t < 0.9 ? t + 0.01 : 0.1;
    }
}

void BM_MomentsChlCollapsed(benchmark::State& state) {
    const HighLowCloseStat s{1.0, -0.8, 0.2};
    const ModelParams p{1.0};
    double t = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(moments_chl_collapsed(t, s, p));
        t = t < 0.9 ? t + 0.01 : 0.1;
    }
}

}  // namespace

BENCHMARK(BM_Summaries<false>)->Name("summaries/serial")->Args({20000, 0})->Args({20000, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Summaries<true>)->Name("summaries/omp")->Args({20000, 0})->Args({20000, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Accumulate<false>)->Name("accumulate/serial")->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Accumulate<true>)->Name("accumulate/omp")->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentsChl);
BENCHMARK(BM_MomentsChlCollapsed);

BENCHMARK_MAIN();
