#include <benchmark/benchmark.h>

#include "dynascore/equilibrium.hpp"
#include "dynascore/revenue.hpp"

using namespace dynascore;

namespace {

Execution mode(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void simulate(benchmark::State& state) {
    ExperimentConfig c;
    c.spec.format = Format::FirstPrice;
    c.bidding = ClosedFormFPA{};
    c.n_samples = 200000;
    c.seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_revenue(c, mode(state)).mean);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.n_samples));
}

void best_response_sweep(benchmark::State& state) {
    const auto dist = ValueDistribution::uniform();
    MarketParams params;
    params.r = 0.05;
    SolverOptions o;
    o.execution = mode(state);
    const BidFunction opponent = tabulate_closed_form(dist, params.p, o);
    std::vector<double> values;
    for (int i = 0; i < 512; ++i) values.push_back(i / 511.0);
    for (auto _ : state) benchmark::DoNotOptimize(fpa_best_response_sweep(dist, params, opponent, values, o));
}

}  // namespace

BENCHMARK(simulate)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(best_response_sweep)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
