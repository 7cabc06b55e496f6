#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>

#include "nidsgen/features.hpp"
#include "nidsgen/flow.hpp"
#include "nidsgen/pcap.hpp"
#include "nidsgen/synthetic.hpp"

namespace {

using namespace nidsgen;

const std::vector<PacketRecord>& corpus_packets() {
    static const std::vector<PacketRecord> packets = [] {
        CorpusConfig cfg;
        cfg.packets = 50000;
        const Corpus corpus = generate_corpus(cfg);
        const auto path = std::filesystem::temp_directory_path() / "nidsgen-bench-corpus.pcap";
        {
            std::ofstream out(path, std::ios::binary);
            write_capture(corpus.packets, out);
        }
        auto decoded = read_capture(path);
        std::filesystem::remove(path);
        return std::move(decoded.packets);
    }();
    return packets;
}

void BM_AssembleFlows(benchmark::State& state) {
    const auto& packets = corpus_packets();
    const auto jobs = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto flows = assemble_flows(packets, FlowConfig{}, jobs);
        benchmark::DoNotOptimize(flows.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * packets.size()));
}
BENCHMARK(BM_AssembleFlows)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_FinalizeFeatures(benchmark::State& state) {
    const auto flows = assemble_flows(corpus_packets(), FlowConfig{});
    for (auto _ : state) {
        for (const auto& f : flows) {
            auto v = finalize(f);
            benchmark::DoNotOptimize(v.values.data());
        }
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * flows.size()));
}
BENCHMARK(BM_FinalizeFeatures)->Unit(benchmark::kMillisecond);

}  // namespace
