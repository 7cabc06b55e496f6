#include <benchmark/benchmark.h>

#include "nidsgen/mrmr.hpp"
#include "nidsgen/synthetic.hpp"

namespace {

using namespace nidsgen;

DatasetTable make_table(std::size_t features, std::size_t benign) {
    ShiftedPairConfig cfg;
    cfg.features = features;
    cfg.benign = benign;
    return generate_shifted_pair(cfg).first;
}

void BM_MrmrRank(benchmark::State& state) {
    const auto table = make_table(static_cast<std::size_t>(state.range(0)), 20000);
    MrmrConfig cfg;
    for (auto _ : state) {
        auto r = mrmr_rank(table, table.cols(), cfg);
        benchmark::DoNotOptimize(r.names.data());
    }
}
BENCHMARK(BM_MrmrRank)->Arg(16)->Arg(77)->Unit(benchmark::kMillisecond);

void BM_Discretize(benchmark::State& state) {
    const auto table = make_table(1, 100000);
    const auto col = table.column(0);
    for (auto _ : state) {
        auto codes = discretize(col);
        benchmark::DoNotOptimize(codes.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * col.size()));
}
BENCHMARK(BM_Discretize)->Unit(benchmark::kMillisecond);

}  // namespace
