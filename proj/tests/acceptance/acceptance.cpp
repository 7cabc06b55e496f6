// Acceptance run: one PASS / FAIL / SKIP line per criterion, exit 1 on any FAIL.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "../oracles/metrics_oracle.hpp"
#include "../oracles/mrmr_oracle.hpp"
#include "../support/flow_compare.hpp"
#include "../support/mrmr_data.hpp"
#include "../support/scenarios.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/experiments.hpp"
#include "nidsgen/features.hpp"
#include "nidsgen/labeling.hpp"
#include "nidsgen/learners.hpp"
#include "nidsgen/metrics.hpp"
#include "nidsgen/mrmr.hpp"
#include "nidsgen/rng.hpp"
#include "nidsgen/synthetic.hpp"

using namespace nidsgen;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum class Status { pass, fail, skip } status = Status::pass;
    std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Status::fail, std::move(d)}; }

struct Args {
    fs::path cli;
    fs::path data;
    fs::path work;
    fs::path cic17, cic18;
    std::size_t jobs = 1;
    std::optional<std::size_t> cic_benign;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string fmt(double x, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
}

// ---- 1 ----------------------------------------------------------------------

Outcome metric_oracles() {
    Rng rng(derive_seed(1, {"acceptance", "metrics"}));
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const Confusion c{rng.below(5000), rng.below(5000), rng.below(5000), rng.below(5000)};
        worst = std::max(worst, std::abs(mcc(c) - oracle::mcc(c.tp, c.tn, c.fp, c.fn)));
        worst = std::max(worst, std::abs(f1(c) - oracle::f1(c.tp, c.fp, c.fn)));
    }
    if (worst > 1e-12) return fail("max MCC/F1 deviation " + std::to_string(worst));
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = rng.below(3) ? rng.uniform() : static_cast<double>(rng.below(5)) / 5;
            y[j] = static_cast<std::uint8_t>(rng.below(2));
        }
        // Both classes must be present.
        const std::size_t i0 = rng.below(n), i1 = (i0 + 1 + rng.below(n - 1)) % n;
        y[i0] = 0;
        y[i1] = 1;
        if (auroc(s, y) != oracle::auroc(s, y)) return fail("AUROC differs from pairwise count on set " + std::to_string(i));
    }
    return pass("1000 confusion matrices within " + std::to_string(worst) + ", 200 AUROC sets exact");
}

// ---- 2 ----------------------------------------------------------------------

Outcome flow_oracle(const Args& a) {
    const auto dir = a.work / "flow-oracle";
    fs::create_directories(dir);
    std::size_t flows = 0, packets = 0, values = 0;
    std::set<std::string> ends;
    std::set<int> protos;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto sc = testsupport::random_scenario(seed);
        const auto path = dir / ("capture-" + std::to_string(seed) + ".pcap");
        sc.script.write(path);
        const auto cmp = testsupport::compare_with_oracle(path, sc.hard_timeout_s, seed % 2 ? 2 : 1);
        if (!cmp.mismatches.empty()) return fail("capture " + std::to_string(seed) + ": " + cmp.mismatches.front());
        flows += cmp.flows;
        packets += cmp.packets;
        values += cmp.features_checked;
        FlowConfig cfg;
        cfg.hard_timeout_s = sc.hard_timeout_s;
        const auto decoded = read_capture(path);
        for (const auto& f : assemble_flows(decoded.packets, cfg)) {
            ends.insert(std::string(to_string(f.terminated_by)));
            protos.insert(f.key.ip_protocol);
        }
    }
    for (const char* e : {"fin", "rst", "idle_timeout", "end_of_capture"}) {
        if (!ends.count(e)) return fail(std::string("no flow closed by ") + e);
    }
    for (int p : {6, 17, 1, 58}) {
        if (!protos.count(p)) return fail("no flow with protocol " + std::to_string(p));
    }
    return pass("50 captures, " + std::to_string(flows) + " flows, " + std::to_string(packets) + " packets conserved, " +
                std::to_string(values) + " feature values within 1e-9");
}

// ---- 3 ----------------------------------------------------------------------

Outcome mrmr_oracle() {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = testsupport::random_small(derive_seed(seed, {"acceptance", "mrmr"}));
        const std::size_t d = s.cols.size();
        const auto full = mrmr_rank(s.table, d);
        const auto ref = oracle::greedy(s.cols, s.y, d, false, kScoreTieTolerance);
        for (std::size_t t = 0; t < d; ++t) {
            if (full.indices[t] != ref[t].index) {
                return fail("dataset " + std::to_string(seed) + " step " + std::to_string(t) + ": picked " +
                            std::to_string(full.indices[t]) + ", oracle " + std::to_string(ref[t].index));
            }
            if (std::abs(full.score[t] - ref[t].score) > 1e-12) return fail("score mismatch on dataset " + std::to_string(seed));
        }
        for (std::size_t k = 1; k <= d; ++k) {
            const auto part = mrmr_rank(s.table, k);
            if (!std::equal(part.indices.begin(), part.indices.end(), full.indices.begin())) {
                return fail("prefix property broken on dataset " + std::to_string(seed) + " k=" + std::to_string(k));
            }
        }
    }
    return pass("20 datasets: traces equal the greedy oracle, all prefixes consistent");
}

// ---- 4 ----------------------------------------------------------------------

DatasetTable xy_table(const std::vector<std::array<double, 2>>& xy, const std::vector<int>& y) {
    std::vector<double> v;
    std::vector<std::string> l;
    for (std::size_t i = 0; i < xy.size(); ++i) {
        v.insert(v.end(), {xy[i][0], xy[i][1]});
        l.push_back(y[i] ? "Malicious" : "Benign");
    }
    return DatasetTable({"x", "y"}, v, l);
}

double train_accuracy(const Model& m, const DatasetTable& t) {
    const auto p = predict(m, t);
    const auto truth = t.binary_targets();
    std::size_t ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) ok += p.labels[i] == truth[i];
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

Outcome learner_sanity() {
    const auto sep = xy_table({{0, 0}, {0, 1}, {4, 4}, {4, 5}}, {0, 0, 1, 1});
    for (Family f : kAllFamilies) {
        auto p = default_params(f);
        if (f == Family::xgb) p["min_child_weight"] = "0.5";
        const double acc = train_accuracy(fit(f, p, sep, 1), sep);
        if (acc != 1.0) return fail(std::string(family_name(f)) + " separable accuracy " + fmt(acc));
    }
    const auto xr = xy_table({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {0, 0, 1, 1});
    auto dt = default_params(Family::dt);
    dt["max_depth"] = "2";
    if (train_accuracy(fit(Family::dt, dt, xr, 1), xr) != 1.0) return fail("depth-2 tree does not fit XOR");
    const double lda = train_accuracy(fit(Family::lda, default_params(Family::lda), xr, 1), xr);
    if (std::abs(lda - 0.5) > 0.05) return fail("LDA XOR accuracy " + fmt(lda));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed(seed, {"acceptance", "boosting"}));
        const std::size_t n = 30 + rng.below(100), d = 1 + rng.below(5);
        std::vector<double> v;
        std::vector<std::string> l, names;
        for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
        for (std::size_t i = 0; i < n; ++i) {
            const bool bad = rng.below(2);
            for (std::size_t j = 0; j < d; ++j) v.push_back(rng.normal() + (bad ? rng.uniform() : 0.0));
            l.push_back(bad ? "Malicious" : "Benign");
        }
        const DatasetTable t(names, v, l);
        auto p = default_params(Family::xgb);
        p["learning_rate"] = "0.1";
        p["n_estimators"] = "20";
        p["gamma"] = "0";
        const auto m = fit(Family::xgb, p, t, seed);
        const auto loss = staged_log_loss(std::get<BoostedModel>(m.body()), t);
        for (std::size_t s = 1; s < loss.size(); ++s) {
            if (loss[s] > loss[s - 1]) {
                return fail("dataset " + std::to_string(seed) + ": loss rises at stage " + std::to_string(s));
            }
        }
    }
    return pass("separable 1.0 for all families (xgb min_child_weight=0.5), XOR tree 1.0, LDA " + fmt(lda, 2) +
                ", boosting loss monotone on 20 datasets");
}

// ---- 5 ----------------------------------------------------------------------

Outcome shifted_pair(const Args& a) {
    const auto dir = a.work / "shifted-pair";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto [ta, tb] = generate_shifted_pair({});
    save_csv(ta, dir / "synthA.csv");
    save_csv(tb, dir / "synthB.csv");
    ExperimentConfig cfg;
    cfg.datasets = {{"synthA", dir / "synthA.csv", {}}, {"synthB", dir / "synthB.csv", {}}};
    cfg.seeds = {1};
    cfg.output = dir / "out";
    cfg.jobs = a.jobs;
    const auto out = run_matrix(cfg);
    std::ostringstream d;
    bool ok = true;
    double within_min = 1, cross_max = -1;
    for (const auto& r : out.results) {
        const auto* m = r.reported();
        if (!m) return fail(r.spec.id + ": " + r.error);
        if (r.spec.cross()) {
            cross_max = std::max(cross_max, m->mcc);
            ok = ok && m->mcc <= 0.5;
        } else {
            within_min = std::min(within_min, m->mcc);
            ok = ok && m->mcc >= 0.95;
        }
    }
    d << out.results.size() << " cells, within MCC min " << fmt(within_min) << ", cross MCC max " << fmt(cross_max);
    return ok ? pass(d.str()) : fail(d.str());
}

// ---- 6 ----------------------------------------------------------------------

int sh(const std::string& cmd, const fs::path& log) {
    return std::system((cmd + " >>" + log.string() + " 2>&1").c_str());
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome pipeline_run(const Args& a, const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto log = dir / "log.txt";
    const std::string cli = q(a.cli);
    const std::vector<std::string> steps = {
        cli + " extract --pcap " + q(a.data / "capture.pcap") + " --out " + q(dir / "flows.csv"),
        cli + " label --flows " + q(dir / "flows.csv") + " --schedule " + q(a.data / "schedule.csv") + " --out " +
            q(dir / "labeled.csv"),
        cli + " prep --in " + q(dir / "labeled.csv") + " --out " + q(dir / "prepared.csv"),
        cli + " matrix --datasets corpus=" + q(dir / "prepared.csv") + " --seeds 7 --grid table2 --output " +
            q(dir / "matrix") + " --jobs " + std::to_string(a.jobs),
        cli + " viz --in " + q(dir / "prepared.csv") + " --out-dir " + q(dir / "viz") +
            " --pca --minmax --resolution 80 --jobs " + std::to_string(a.jobs),
    };
    for (const auto& s : steps) {
        if (const int rc = sh(s, log); rc != 0) return fail("command failed (" + std::to_string(rc) + "): " + s);
    }
    return pass("");
}

Outcome end_to_end(const Args& a) {
    const auto one = a.work / "pipeline-1", two = a.work / "pipeline-2";
    for (const auto& dir : {one, two}) {
        const auto r = pipeline_run(a, dir);
        if (r.status != Outcome::Status::pass) return r;
    }
    std::size_t bytes = 0;
    for (const char* f : {"matrix/results.jsonl", "viz/figure.svg"}) {
        const auto x = slurp(one / f), y = slurp(two / f);
        if (x.empty()) return fail(std::string(f) + " is empty");
        if (x != y) return fail(std::string(f) + " differs between runs");
        bytes += x.size();
    }
    std::size_t cells = 0;
    std::istringstream in(slurp(one / "matrix/results.jsonl"));
    for (std::string line; std::getline(in, line);) ++cells;
    return pass(std::to_string(cells) + " result records and figure.svg identical across runs (" +
                std::to_string(bytes) + " bytes)");
}

// ---- 7 ----------------------------------------------------------------------

/// extract + label of the bundled capture, in-process.
DatasetTable corpus_table(const fs::path& data) {
    const auto cap = read_capture(data / "capture.pcap");
    const auto matcher = ScheduleMatcher::compile(load_schedule(data / "schedule.csv"));
    std::vector<double> values;
    std::vector<std::string> labels;
    for (const auto& f : assemble_flows(cap.packets, {})) {
        const auto out = matcher.label({f.first_ts_ns, f.initiator, f.responder, f.key.ip_protocol});
        if (out.kind == LabelOutcome::Kind::drop) continue;
        const auto v = finalize(f);
        values.insert(values.end(), v.values.begin(), v.values.end());
        labels.push_back(out.label);
    }
    return DatasetTable(model_schema().model_names(), values, labels);
}

/// Checks one single-attack run; returns an empty string when it holds.
std::string check_single_attack(const RunOutcome& out, const std::string& attack,
                                const std::map<std::string, std::map<std::string, std::size_t>>& population,
                                std::size_t ratio, bool& capped) {
    for (const auto& r : out.results) {
        if (!r.ok) return r.spec.id + ": " + r.error;
        if (r.repetitions.size() != 3) return r.spec.id + ": " + std::to_string(r.repetitions.size()) + " repetitions";
        std::size_t best = 0;
        for (std::size_t i = 1; i < r.repetitions.size(); ++i) {
            if (r.repetitions[i].metrics.mcc > r.repetitions[best].metrics.mcc) best = i;
        }
        if (r.aggregate != best) return r.spec.id + ": aggregate is not the max-MCC repetition";
        std::set<std::vector<double>> distinct;
        for (const auto& rep : r.repetitions) {
            for (const auto& [src, counts] : rep.source_counts) {
                const std::size_t n_attack = population.at(src).at(attack);
                const std::size_t n_benign = population.at(src).at("Benign");
                const std::size_t want = std::min(ratio * n_attack, n_benign);
                capped = capped || want < ratio * n_attack;
                if (counts.size() != 2 || counts.at(attack) != n_attack || counts.at("Benign") != want) {
                    return r.spec.id + ": subset of " + src + " is not " + std::to_string(want) + ":" +
                           std::to_string(n_attack);
                }
            }
            std::size_t split_total = 0;
            for (const auto& [l, n] : rep.train_counts) split_total += n;
            for (const auto& [l, n] : rep.test_counts) split_total += n;
            if (!r.spec.cross() && split_total != rep.source_counts.begin()->second.at(attack) +
                                                      rep.source_counts.begin()->second.at("Benign")) {
                return r.spec.id + ": split does not partition the subset";
            }
        }
    }
    return {};
}

Outcome single_attack(const Args& a) {
    const auto dir = a.work / "single-attack";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Bundled corpus: too little benign traffic for 10:1, so the cap applies.
    const auto corpus = corpus_table(a.data);
    save_csv(corpus, dir / "corpus.csv");
    ExperimentConfig cfg;
    cfg.datasets = {{"corpus", dir / "corpus.csv", {}}};
    cfg.tasks = {TaskKind::single_attack};
    cfg.attacks = {"DoS Hulk", "SSH-Patator"};
    cfg.seeds = {11};
    cfg.grid = "default";
    cfg.output = dir / "corpus-out";
    cfg.jobs = a.jobs;
    bool capped = false;
    const auto c1 = run_single_attack(cfg);
    std::vector<CellResult> hulk, ssh;
    for (const auto& r : c1.results) (r.spec.attack == "DoS Hulk" ? hulk : ssh).push_back(r);
    const std::map<std::string, std::map<std::string, std::size_t>> corpus_pop{{"corpus", corpus.class_counts()}};
    if (auto e = check_single_attack({hulk, 0, 0}, "DoS Hulk", corpus_pop, 10, capped); !e.empty()) return fail(e);
    if (auto e = check_single_attack({ssh, 0, 0}, "SSH-Patator", corpus_pop, 10, capped); !e.empty()) return fail(e);

    // Shifted pair: 2000 benign rows cover 10 x 60 SSH-Patator rows exactly.
    const auto [ta, tb] = generate_shifted_pair({});
    save_csv(ta, dir / "synthA.csv");
    save_csv(tb, dir / "synthB.csv");
    ExperimentConfig sp = cfg;
    sp.datasets = {{"synthA", dir / "synthA.csv", {}}, {"synthB", dir / "synthB.csv", {}}};
    sp.attacks = {"SSH-Patator"};
    sp.output = dir / "pair-out";
    const auto c2 = run_single_attack(sp);
    const std::map<std::string, std::map<std::string, std::size_t>> pair_pop{{"synthA", ta.class_counts()},
                                                                            {"synthB", tb.class_counts()}};
    bool pair_capped = false;
    if (auto e = check_single_attack(c2, "SSH-Patator", pair_pop, 10, pair_capped); !e.empty()) return fail(e);
    if (!capped) return fail("expected the corpus subsets to hit the benign cap");
    if (pair_capped) return fail("expected exact 10:1 subsets on the shifted pair");
    return pass(std::to_string(c1.results.size() + c2.results.size()) +
                " cells x 3 repetitions; corpus capped (benign " + std::to_string(corpus.class_counts().at("Benign")) +
                "), shifted pair exact 600:60; aggregates are max-MCC repetitions");
}

// ---- 8 ----------------------------------------------------------------------

Outcome cic_reference(const Args& a) {
    if (a.cic17.empty() || a.cic18.empty()) {
        return {Outcome::Status::skip, "pass --cic17 and --cic18 (CIC-IDS CSV files) to run"};
    }
    // Published within-dataset MCC of the tree families.
    const std::map<std::pair<std::string, std::string>, double> reference = {
        {{"CIC17", "dt"}, 0.9972}, {{"CIC17", "rf"}, 0.9974}, {{"CIC17", "xgb"}, 0.9974},
        {{"CIC18", "dt"}, 0.9633}, {{"CIC18", "rf"}, 0.9645}, {{"CIC18", "xgb"}, 0.9648},
    };
    ExperimentConfig cfg;
    cfg.datasets = {{"CIC17", a.cic17, "cic"}, {"CIC18", a.cic18, "cic"}};
    cfg.pairs = {{"CIC17", "CIC17"}, {"CIC18", "CIC18"}};
    cfg.families = {Family::dt, Family::rf, Family::xgb};
    cfg.seeds = {1};
    cfg.benign_subsample = a.cic_benign;
    cfg.output = a.work / "cic";
    cfg.jobs = a.jobs;
    const auto out = run_matrix(cfg);
    std::ostringstream d;
    bool ok = true;
    for (const auto& r : out.results) {
        const auto* m = r.reported();
        if (!m) return fail(r.spec.id + ": " + r.error);
        const double ref = reference.at({r.spec.train, std::string(family_name(r.spec.family))});
        const double gap = std::abs(m->mcc - ref) * 100;
        ok = ok && gap <= 2.0;
        d << r.spec.train << "/" << family_name(r.spec.family) << " " << fmt(m->mcc * 100, 2) << "% ";
    }
    return ok ? pass(d.str()) : fail(d.str());
}

}  // namespace

int main(int argc, char** argv) {
    Args a;
    CLI::App app("Acceptance checks");
    app.add_option("--cli", a.cli, "Path of the nidsgen executable")->required();
    app.add_option("--data", a.data, "Directory holding capture.pcap and schedule.csv")->required();
    app.add_option("--work", a.work, "Scratch directory")->required();
    app.add_option("--jobs", a.jobs, "Worker threads");
    app.add_option("--cic17", a.cic17, "CIC-IDS2017 CSV for the optional reference check");
    app.add_option("--cic18", a.cic18, "CIC-IDS2018 CSV for the optional reference check");
    app.add_option("--cic-benign", a.cic_benign, "Benign rows kept per CIC dataset (default all)");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(a.work);

    struct Criterion {
        int id;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, 10, [] { return metric_oracles(); }},
        {2, 30, [&] { return flow_oracle(a); }},
        {3, 30, [] { return mrmr_oracle(); }},
        {4, 60, [] { return learner_sanity(); }},
        {5, 120, [&] { return shifted_pair(a); }},
        {6, 120, [&] { return end_to_end(a); }},
        {7, 60, [&] { return single_attack(a); }},
        {8, 0, [&] { return cic_reference(a); }},
    };
    bool any_fail = false;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.status == Outcome::Status::pass && c.limit_s > 0 && secs > c.limit_s) {
            o = fail("took " + fmt(secs, 1) + " s, limit " + fmt(c.limit_s, 0) + " s; " + o.detail);
        }
        const char* tag = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::fail ? "FAIL" : "SKIP";
        any_fail = any_fail || o.status == Outcome::Status::fail;
        std::cout << "criterion " << c.id << ": " << tag << " (" << fmt(secs, 2) << " s) " << o.detail << std::endl;
    }
    return any_fail ? 1 : 0;
}
