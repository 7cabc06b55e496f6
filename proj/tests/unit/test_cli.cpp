#include <gtest/gtest.h>

#include <CLI11.hpp>
#include <fstream>
#include "json.hpp"

#include "../support/scenarios.hpp"
#include "cli/app.hpp"
#include "nidsgen/synthetic.hpp"

namespace fs = std::filesystem;
using nidsgen::cli::Cli;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "nidsgen");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    Cli cli;
    return cli.run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, EveryFlagIsDocumentedInHelp) {
    Cli cli;
    auto& app = cli.app();
    auto subs = app.get_subcommands({});
    ASSERT_EQ(subs.size(), 11u);
    std::vector<CLI::App*> all{&app};
    all.insert(all.end(), subs.begin(), subs.end());
    for (auto* sub : all) {
        const std::string help = sub->help();
        for (const auto* opt : sub->get_options()) {
            const std::string name = opt->get_name();
            if (name == "--help") continue;
            EXPECT_FALSE(opt->get_description().empty()) << sub->get_name() << " " << name;
            EXPECT_NE(help.find(opt->get_lnames().empty() ? name : "--" + opt->get_lnames().front()),
                      std::string::npos)
                << sub->get_name() << " " << name;
        }
    }
}

TEST(Cli, ReferencePageIsCurrent) {
    Cli cli;
    const auto page = slurp(fs::path(NIDSGEN_SOURCE_DIR) / "docs" / "cli-reference.md");
    EXPECT_EQ(page, cli.markdown_reference()) << "regenerate with: nidsgen --markdown-reference docs/cli-reference.md";
    for (const char* sub : {"extract", "label", "prep", "select", "train", "evaluate", "matrix", "attack", "sweep",
                            "stats", "viz"}) {
        EXPECT_NE(page.find(std::string("## ") + sub), std::string::npos) << sub;
    }
}

TEST(Cli, ExitCodes) {
    const auto dir = testsupport::scratch_dir("cli-exit");
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_EQ(run({"extract", "--no-such-flag"}), 1);
    EXPECT_EQ(run({"extract", "--pcap", (dir / "missing.pcap").string(), "--out", (dir / "f.csv").string()}), 2);
    std::ofstream(dir / "junk.pcap") << "not a capture at all, just text";
    EXPECT_EQ(run({"extract", "--pcap", (dir / "junk.pcap").string(), "--out", (dir / "f.csv").string()}), 2);
    std::ofstream(dir / "t.csv") << "a,label\n1,Benign\n2,Bot\n";
    EXPECT_EQ(run({"prep", "--in", (dir / "t.csv").string(), "--out", (dir / "p.csv").string(), "--split", "0.5"}), 1);
    EXPECT_EQ(run({"matrix", "--output", (dir / "m").string()}), 1);
}

TEST(Cli, PipelineIsRerunSafe) {
    const auto dir = testsupport::scratch_dir("cli-pipeline");
    nidsgen::CorpusConfig cc;
    cc.packets = 1500;
    cc.seed = 4;
    const auto corpus = nidsgen::generate_corpus(cc);
    {
        std::ofstream out(dir / "c.pcap", std::ios::binary);
        nidsgen::write_capture(corpus.packets, out);
        std::ofstream(dir / "s.csv") << corpus.schedule_csv;
    }
    auto pipeline = [&](const fs::path& out) {
        fs::create_directories(out);
        ASSERT_EQ(run({"extract", "--pcap", (dir / "c.pcap").string(), "--out", (out / "flows.csv").string()}), 0);
        ASSERT_EQ(run({"label", "--flows", (out / "flows.csv").string(), "--schedule", (dir / "s.csv").string(),
                       "--out", (out / "labeled.csv").string()}),
                  0);
        ASSERT_EQ(run({"prep", "--in", (out / "labeled.csv").string(), "--out", (out / "train.csv").string(),
                       "--binarize", "--split", "0.8", "--test-out", (out / "test.csv").string(), "--onehot",
                       "--minmax", "--seed", "3"}),
                  0);
        ASSERT_EQ(run({"train", "--in", (out / "train.csv").string(), "--out", (out / "model.json").string(),
                       "--family", "dt", "--grid", "default", "--seed", "3"}),
                  0);
        ASSERT_EQ(run({"evaluate", "--model", (out / "model.json").string(), "--in", (out / "test.csv").string(),
                       "--out", (out / "metrics.json").string()}),
                  0);
    };
    pipeline(dir / "one");
    pipeline(dir / "two");
    for (const char* f : {"flows.csv", "labeled.csv", "train.csv", "test.csv", "model.json", "metrics.json"}) {
        EXPECT_EQ(slurp(dir / "one" / f), slurp(dir / "two" / f)) << f;
    }
    const auto manifest = nlohmann::json::parse(slurp(dir / "one" / "manifest.json"));
    for (const char* cmd : {"extract", "label", "prep", "train", "evaluate"}) {
        EXPECT_TRUE(manifest["runs"].contains(cmd)) << cmd;
    }
    const auto m2 = nlohmann::json::parse(slurp(dir / "two" / "manifest.json"));
    EXPECT_EQ(manifest["runs"]["prep"]["outputs"], m2["runs"]["prep"]["outputs"]);
    const auto metrics = nlohmann::json::parse(slurp(dir / "one" / "metrics.json"));
    EXPECT_GT(metrics["mcc"].get<double>(), 0.5);
}
