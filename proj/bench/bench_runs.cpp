#include <benchmark/benchmark.h>

#include "arxrls/mc_harness.hpp"

namespace {

arxrls::ExperimentConfig bench_config(std::int64_t runs)
{
    arxrls::ExperimentConfig c = arxrls::default_experiment();
    c.runs = static_cast<std::size_t>(runs);
    c.k_grid = {512, 1024, 2048, 4096};
    return c;
}

void BM_RunsSerial(benchmark::State& state)
{
    const auto config = bench_config(state.range(0));
    const auto ids = arxrls::all_run_ids(config);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(arxrls::execute_runs_serial(config, ids));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RunsParallel(benchmark::State& state)
{
    const auto config = bench_config(state.range(0));
    const auto ids = arxrls::all_run_ids(config);
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(arxrls::execute_runs_parallel(config, ids, threads));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = threads;
}

void BM_Summarize(benchmark::State& state)
{
    const auto config = bench_config(state.range(0));
    const auto records = arxrls::execute_runs_parallel(config, arxrls::all_run_ids(config));
    const auto reference = arxrls::reference_statistics(config);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(arxrls::summarize(config, records, reference));
    }
}

} // namespace

BENCHMARK(BM_RunsSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunsParallel)->ArgsProduct({{64, 256}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Summarize)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
