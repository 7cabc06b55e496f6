#include <benchmark/benchmark.h>

#include "nidsgen/analysis.hpp"
#include "nidsgen/rng.hpp"

namespace {

using namespace nidsgen;

void BM_Kde(benchmark::State& state) {
    Rng rng(3);
    std::vector<Point2> pts(static_cast<std::size_t>(state.range(0)));
    for (auto& p : pts) {
        const double a = rng.normal();
        p = {a, 0.5 * a + rng.normal()};
    }
    KdeConfig cfg;
    cfg.resolution = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) {
        auto g = kde_density(pts, cfg);
        benchmark::DoNotOptimize(g.density.data());
    }
}
BENCHMARK(BM_Kde)->Args({1000, 100})->Args({5000, 200})->Unit(benchmark::kMillisecond);

}  // namespace
