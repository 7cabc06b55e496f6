// Writes the bundled synthetic inputs: a labelled capture with its attack
// schedule, and optionally a pair of feature tables with shifted attacks.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "nidsgen/dataset.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/synthetic.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app("Generate synthetic captures and feature tables", "nidsgen-synth");
    fs::path out_dir;
    std::uint64_t seed = 1;
    std::size_t packets = 5000;
    bool pair = false;
    app.add_option("--out-dir", out_dir, "Output directory")->required();
    app.add_option("--seed", seed, "Generator seed")->required();
    app.add_option("--packets", packets, "Packets in the capture")->capture_default_str();
    app.add_flag("--shifted-pair", pair, "Also write synthA.csv and synthB.csv with rescaled attack clusters");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        fs::create_directories(out_dir);
        nidsgen::CorpusConfig cfg;
        cfg.seed = seed;
        cfg.packets = packets;
        const auto corpus = nidsgen::generate_corpus(cfg);
        {
            std::ofstream out(out_dir / "capture.pcap", std::ios::binary | std::ios::trunc);
            nidsgen::write_capture(corpus.packets, out);
        }
        std::ofstream(out_dir / "schedule.csv", std::ios::trunc) << corpus.schedule_csv;
        if (pair) {
            nidsgen::ShiftedPairConfig pc;
            pc.seed = seed;
            const auto [a, b] = nidsgen::generate_shifted_pair(pc);
            nidsgen::save_csv(a, out_dir / "synthA.csv");
            nidsgen::save_csv(b, out_dir / "synthB.csv");
        }
    } catch (const nidsgen::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
