#include <benchmark/benchmark.h>

#include "nidsgen/learners.hpp"
#include "nidsgen/synthetic.hpp"

namespace {

using namespace nidsgen;

const DatasetTable& train_table() {
    static const DatasetTable t = [] {
        ShiftedPairConfig cfg;
        cfg.features = 20;
        cfg.benign = 10000;
        cfg.attacks = {{"DoS Hulk", 2000}, {"Bot", 1000}};
        return generate_shifted_pair(cfg).first;
    }();
    return t;
}

void BM_Fit(benchmark::State& state) {
    const auto family = static_cast<Family>(state.range(0));
    const auto& t = train_table();
    const auto params = default_params(family);
    for (auto _ : state) {
        auto m = fit(family, params, t, 1);
        benchmark::DoNotOptimize(&m);
    }
    state.SetLabel(std::string(family_name(family)));
}
BENCHMARK(BM_Fit)
    ->Arg(static_cast<int>(Family::lda))
    ->Arg(static_cast<int>(Family::dt))
    ->Arg(static_cast<int>(Family::rf))
    ->Arg(static_cast<int>(Family::xgb))
    ->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
    const auto& t = train_table();
    const auto m = fit(Family::rf, default_params(Family::rf), t, 1);
    for (auto _ : state) {
        auto p = predict(m, t);
        benchmark::DoNotOptimize(p.scores.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t.rows()));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

}  // namespace
