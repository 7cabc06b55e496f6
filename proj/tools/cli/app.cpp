#include "app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "manifest.hpp"
#include "nidsgen/analysis.hpp"
#include "nidsgen/csv.hpp"
#include "nidsgen/dataset.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/experiments.hpp"
#include "nidsgen/features.hpp"
#include "nidsgen/flow.hpp"
#include "nidsgen/labeling.hpp"
#include "nidsgen/learners.hpp"
#include "nidsgen/metrics.hpp"
#include "nidsgen/mrmr.hpp"
#include "nidsgen/parallel.hpp"
#include "nidsgen/pcap.hpp"
#include "nidsgen/rng.hpp"
#include "nidsgen/svg.hpp"

namespace nidsgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
    std::string markdown_reference;

    std::size_t jobs = 1;
    std::uint64_t seed = 0;
    std::string format = "auto";
    std::string in;
    std::string out;
    std::string out_dir;

    // extract
    std::string pcap;
    double idle_timeout = 120.0;
    double hard_timeout = 0.0;
    double activity_timeout = 5.0;
    double reorder_tolerance = 0.001;

    // label
    std::string flows;
    std::string schedule;
    std::string name;

    // prep
    std::string test_out;
    bool binarize = false;
    bool onehot = false;
    bool minmax = false;
    std::string single_attack;
    std::size_t ratio = 10;
    std::size_t benign_subsample = 0;
    double split = 0.8;
    double rare_threshold = 0.001;

    // select
    std::size_t k = 0;
    std::string variant = "mid";
    std::size_t bins = kDefaultMiBins;
    std::string attack;

    // train / evaluate
    std::string family;
    std::string grid = "table2";
    std::vector<std::string> params;
    std::string ranking;
    std::string model;
    std::string scores;
    double threshold = 0.5;

    // matrix / attack / sweep
    std::string config;
    std::string datasets;
    std::string seeds;
    std::string families;
    std::string attacks;
    std::string ks;
    std::string modes;
    std::size_t repetitions = 3;
    std::size_t benign_ratio = 10;
    std::vector<std::string> sets;

    // stats / viz
    std::string features;
    std::string x;
    std::string y;
    bool pca = false;
    std::string fit_on;
    std::size_t resolution = 200;
    double bandwidth_scale = 1.0;
    std::string title;
    std::size_t max_points = 5000;
};

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool given(const CLI::App* sub, const std::string& flag) {
    const auto* opt = sub->get_option_no_throw(flag);
    return opt && opt->count() > 0;
}

void require_seed(const CLI::App* sub, const std::string& why) {
    if (!given(sub, "--seed")) throw UsageError(sub->get_name() + ": --seed is required " + why);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

fs::path out_dir_of(const fs::path& file) {
    const auto p = file.parent_path();
    return p.empty() ? fs::path(".") : p;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    ensure_dir(out_dir_of(path));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve_format(const std::string& format, const fs::path& path) {
    if (format == "native" || format == "cic") return format;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::string first;
    std::getline(in, first);
    return first.rfind("# schema=", 0) == 0 ? "native" : "cic";
}

DatasetTable load_table(const fs::path& path, const std::string& format, LoadReport* report = nullptr) {
    CsvLoadOptions opt;
    if (resolve_format(format, path) == "cic") {
        opt.exclude_columns = cic_excluded_columns();
        opt.cic_canonical_names = true;
    }
    return load_csv(path, opt, report);
}

/// Dataset CSV plus its provenance sidecar. Tables still in the model schema
/// keep the schema comment so later steps detect the native format.
void write_table(const DatasetTable& table, const fs::path& path, RunManifest& m) {
    {
        auto out = open_out(path);
        if (table.feature_names() == model_schema().names()) out << schema_comment(model_schema()) << '\n';
        write_csv(table, out);
    }
    const fs::path prov = path.string() + ".provenance.jsonl";
    {
        auto out = open_out(prov);
        out << serialize_provenance(table.provenance());
    }
    m.output(path);
    m.output(prov);
}

void record_options(const CLI::App* sub, RunManifest& m) {
    for (const auto* opt : sub->get_options()) {
        const std::string name = opt->get_name(false, false);
        if (name.empty() || name == "--help" || name == "-h") continue;
        const auto& res = opt->results();
        if (!res.empty()) {
            m.config()[name] = res.size() == 1 ? json(res[0]) : json(res);
        } else if (!opt->get_default_str().empty()) {
            m.config()[name] = opt->get_default_str();
        }
    }
}

std::string slug(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            out += static_cast<char>(std::tolower(c));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? "unnamed" : out;
}

// ---- subcommands --------------------------------------------------------------------

int cmd_extract(const Options& o, const CLI::App* sub) {
    RunManifest m("extract", out_dir_of(o.out));
    record_options(sub, m);
    Stopwatch total;
    const auto cap = read_capture(o.pcap);
    m.input(o.pcap);
    m.timing("decode", total.seconds());

    FlowConfig fc;
    fc.idle_timeout_s = o.idle_timeout;
    if (given(sub, "--hard-timeout")) fc.hard_timeout_s = o.hard_timeout;
    fc.reorder_tolerance_s = o.reorder_tolerance;
    Stopwatch flow_time;
    const auto flows = assemble_flows(cap.packets, fc, o.jobs);
    m.timing("flows", flow_time.seconds());

    FeatureConfig feat;
    feat.activity_timeout_s = o.activity_timeout;
    std::vector<FeatureVector> vectors(flows.size());
    parallel_for(flows.size(), o.jobs, [&](std::size_t i) { vectors[i] = finalize(flows[i], feat); });
    {
        auto out = open_out(o.out);
        FeatureCsvWriter w(out, extraction_schema());
        for (const auto& v : vectors) w.write(v);
    }
    m.output(o.out);

    auto& c = m.config();
    c["frames"] = cap.stats.frames;
    c["decoded_packets"] = cap.stats.decoded;
    c["skipped_packets"] = cap.stats.skipped_total();
    c["flows"] = flows.size();
    m.timing("total", total.seconds());
    m.write();
    std::cerr << "extract: " << cap.stats.decoded << " packets -> " << flows.size() << " flows\n";
    return kExitOk;
}

int cmd_label(const Options& o, const CLI::App* sub) {
    RunManifest m("label", out_dir_of(o.out));
    record_options(sub, m);
    Stopwatch total;
    const auto matcher = ScheduleMatcher::compile(load_schedule(o.schedule));
    m.input(o.schedule);

    std::ifstream in(o.flows);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + o.flows);
    m.input(o.flows);
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw Error(ErrorCode::header_mismatch, o.flows + ": no header row");
    if (header != extraction_schema().names()) {
        throw Error(ErrorCode::header_mismatch, o.flows + ": header is not the " + extraction_schema().version() +
                                                    " extraction schema");
    }
    auto col = [&](const std::string& n) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), n) - header.begin());
    };
    const std::size_t c_sip = col("src_ip"), c_sport = col("src_port"), c_dip = col("dst_ip"),
                      c_dport = col("dst_port"), c_proto = col("ip_prot"), c_ts = col("timestamp");

    std::map<std::string, std::size_t> counts;
    std::size_t dropped = 0;
    {
        auto out = open_out(o.out);
        out << schema_comment(extraction_schema()) << '\n';
        auto h = header;
        h.emplace_back("label");
        write_csv_row(out, h);
        std::vector<std::string> f;
        while (reader.next(f)) {
            const std::string where = o.flows + ":" + std::to_string(reader.line());
            if (f.size() != header.size()) throw Error(ErrorCode::ragged_row, where + ": wrong cell count");
            auto sip = IpAddress::parse(f[c_sip]);
            auto dip = IpAddress::parse(f[c_dip]);
            auto ts = parse_timestamp(f[c_ts]);
            if (!sip || !dip || !ts) throw Error(ErrorCode::parse_error, where + ": bad address or timestamp");
            FlowEndpoints ep;
            ep.first_ts_ns = *ts;
            try {
                ep.initiator = {*sip, static_cast<std::uint16_t>(std::stoul(f[c_sport]))};
                ep.responder = {*dip, static_cast<std::uint16_t>(std::stoul(f[c_dport]))};
                ep.ip_protocol = static_cast<std::uint8_t>(std::stoul(f[c_proto]));
            } catch (const std::logic_error&) {
                throw Error(ErrorCode::parse_error, where + ": bad port or protocol");
            }
            const auto outcome = matcher.label(ep);
            if (outcome.kind == LabelOutcome::Kind::drop) {
                ++dropped;
                continue;
            }
            const std::string label =
                outcome.kind == LabelOutcome::Kind::attack ? outcome.label : std::string(kBenignLabel);
            ++counts[label];
            f.push_back(label);
            write_csv_row(out, f);
        }
    }
    m.output(o.out);
    const fs::path report = o.out + ".class_counts.csv";
    {
        auto out = open_out(report);
        out << class_count_report(counts, o.name.empty() ? fs::path(o.out).stem().string() : o.name);
    }
    m.output(report);
    m.config()["dropped_flows"] = dropped;
    m.timing("total", total.seconds());
    m.write();
    std::cerr << "label: " << counts.size() << " classes, " << dropped << " flows dropped\n";
    return kExitOk;
}

int cmd_prep(const Options& o, const CLI::App* sub) {
    const bool random = !o.single_attack.empty() || given(sub, "--benign-subsample") || given(sub, "--split");
    if (random) require_seed(sub, "for subsampling or splitting");
    if (given(sub, "--split") && o.test_out.empty()) throw UsageError("prep: --split needs --test-out");
    RunManifest m("prep", out_dir_of(o.out));
    record_options(sub, m);
    Stopwatch total;
    LoadReport report;
    DatasetTable t = load_table(o.in, o.format, &report);
    m.input(o.in);
    m.config()["nonfinite_cells"] = report.nonfinite_total;

    if (given(sub, "--benign-subsample")) t = subsample_benign(t, o.benign_subsample, derive_seed(o.seed, {"benign"}));
    if (!o.single_attack.empty()) t = single_attack_subset(t, o.single_attack, o.ratio, derive_seed(o.seed, {"subset"}));
    if (o.binarize) t = binarize_labels(t);
    std::optional<DatasetTable> test;
    if (given(sub, "--split")) {
        auto [a, b] = split_train_test(t, o.split, derive_seed(o.seed, {"split"}));
        t = std::move(a);
        test = std::move(b);
    }
    if (o.onehot) {
        const auto p = onehot_fit(t, "ip_prot", o.rare_threshold);
        t = onehot_apply(t, p);
        if (test) test = onehot_apply(*test, p);
    }
    if (o.minmax) {
        const auto p = minmax_fit(t);
        t = minmax_apply(t, p);
        if (test) test = minmax_apply(*test, p);
    }
    write_table(t, o.out, m);
    if (test) write_table(*test, o.test_out, m);
    m.timing("total", total.seconds());
    m.write();
    std::cerr << "prep: " << t.rows() << " rows x " << t.cols() << " features"
              << (test ? " (+" + std::to_string(test->rows()) + " test rows)" : std::string()) << '\n';
    return kExitOk;
}

int cmd_select(const Options& o, const CLI::App* sub) {
    if (!o.attack.empty()) require_seed(sub, "for the single-attack subset");
    RunManifest m("select", out_dir_of(o.out));
    record_options(sub, m);
    Stopwatch total;
    DatasetTable t = load_table(o.in, o.format);
    m.input(o.in);
    if (!o.attack.empty()) t = single_attack_subset(t, o.attack, o.ratio, derive_seed(o.seed, {"subset"}));
    t = binarize_labels(t);
    MrmrConfig cfg;
    cfg.bins = o.bins;
    cfg.jobs = o.jobs;
    if (o.variant == "miq") {
        cfg.variant = MrmrVariant::miq;
    } else if (o.variant != "mid") {
        throw UsageError("select: --variant must be mid or miq");
    }
    const auto ranking = mrmr_rank(t, o.k == 0 ? t.cols() : o.k, cfg);
    {
        auto out = open_out(o.out);
        write_ranking_csv(ranking, out);
    }
    m.output(o.out);
    m.timing("total", total.seconds());
    m.write();
    for (const auto& n : ranking.names) std::cout << n << '\n';
    return kExitOk;
}

DatasetTable restrict_to_ranking(const DatasetTable& t, const std::string& ranking_path, std::size_t k) {
    std::ifstream in(ranking_path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + ranking_path);
    const auto r = read_ranking_csv(in);
    if (k > r.names.size()) throw Error(ErrorCode::k_out_of_range, "ranking holds " + std::to_string(r.names.size()) + " features");
    std::vector<std::string> names(r.names.begin(), r.names.begin() + static_cast<std::ptrdiff_t>(k == 0 ? r.names.size() : k));
    return select_columns(t, names);
}

int cmd_train(const Options& o, const CLI::App* sub) {
    require_seed(sub, "for training");
    Family family;
    try {
        family = parse_family(o.family);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("train: ") + e.what());
    }
    RunManifest m("train", out_dir_of(o.out));
    record_options(sub, m);
    Stopwatch total;
    DatasetTable t = load_table(o.in, o.format);
    m.input(o.in);
    if (!o.ranking.empty()) {
        t = restrict_to_ranking(t, o.ranking, o.k);
        m.input(o.ranking);
    }

    Model model;
    if (!o.params.empty()) {
        ParamMap pm;
        for (const auto& kv : o.params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("train: --param expects key=value, got '" + kv + "'");
            pm[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        model = fit(family, pm, t, o.seed, o.jobs);
    } else if (o.grid == "table2") {
        GridSearchConfig gc;
        gc.jobs = o.jobs;
        auto res = grid_search(family, search_grid(family), t, o.seed, gc);
        m.config()["grid_best_index"] = res.best_index;
        m.config()["grid_best_mcc"] = res.best_score;
        model = std::move(res.model);
    } else if (o.grid == "default") {
        model = fit(family, default_params(family), t, o.seed, o.jobs);
    } else {
        throw UsageError("train: --grid must be table2 or default");
    }
    if (!model.warning().empty()) std::cerr << "train: " << model.warning() << '\n';
    {
        auto out = open_out(o.out);
        out << model.to_json() << '\n';
    }
    m.output(o.out);
    m.timing("total", total.seconds());
    m.write();
    return kExitOk;
}

int cmd_evaluate(const Options& o, const CLI::App* sub) {
    RunManifest m("evaluate", out_dir_of(o.out));
    record_options(sub, m);
    Stopwatch total;
    const Model model = Model::from_json(read_file(o.model));
    m.input(o.model);
    const DatasetTable t = load_table(o.in, o.format);
    m.input(o.in);
    const auto pred = predict(model, t, o.threshold);
    const auto truth = t.binary_targets();
    const auto r = evaluate(pred.scores, truth, o.threshold);
    json j;
    j["rows"] = t.rows();
    j["threshold"] = o.threshold;
    j["tp"] = r.counts.tp;
    j["tn"] = r.counts.tn;
    j["fp"] = r.counts.fp;
    j["fn"] = r.counts.fn;
    j["mcc"] = r.mcc;
    j["f1"] = r.f1;
    j["auroc"] = r.auroc ? json(*r.auroc) : json(nullptr);
    {
        auto out = open_out(o.out);
        out << j.dump(2) << '\n';
    }
    m.output(o.out);
    if (!o.scores.empty()) {
        auto out = open_out(o.scores);
        out << "score,prediction,label\n";
        for (std::size_t i = 0; i < t.rows(); ++i) {
            const std::vector<std::string> row{format_real(pred.scores[i]), std::to_string(pred.labels[i]),
                                               t.labels()[i]};
            write_csv_row(out, row);
        }
        out.close();
        m.output(o.scores);
    }
    m.timing("total", total.seconds());
    m.write();
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_experiments(const std::string& which, const Options& o, const CLI::App* sub) {
    ExperimentConfig cfg;
    if (!o.config.empty()) cfg = load_config(o.config);
    auto set = [&](const std::string& flag, const std::string& key, const std::string& value) {
        if (given(sub, flag)) apply_config_value(cfg, key, value, fs::current_path());
    };
    set("--datasets", "datasets", o.datasets);
    set("--seeds", "seeds", o.seeds);
    set("--families", "families", o.families);
    set("--grid", "grid", o.grid);
    set("--attacks", "attacks", o.attacks);
    set("--k", "mrmr_k", o.ks);
    set("--repetitions", "repetitions", std::to_string(o.repetitions));
    set("--benign-ratio", "benign_ratio", std::to_string(o.benign_ratio));
    set("--output", "output", o.out_dir);
    if (given(sub, "--jobs")) cfg.jobs = o.jobs;
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError(which + ": --set expects key=value, got '" + kv + "'");
        apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1), fs::current_path());
    }
    if (cfg.seeds.empty()) throw UsageError(which + ": at least one seed is required (--seeds or the seeds key)");
    if (cfg.datasets.empty()) throw UsageError(which + ": no datasets configured");
    if (cfg.output.empty()) throw UsageError(which + ": no output directory (--output or the output key)");
    ensure_dir(cfg.output);

    RunManifest m(which, cfg.output);
    record_options(sub, m);
    if (!o.config.empty()) m.input(o.config);
    for (const auto& d : cfg.datasets) m.input(d.path);
    const auto before = m.previous_inputs();
    if (!before.empty()) {
        for (const auto& d : cfg.datasets) {
            auto it = before.find(d.path.generic_string());
            if (it != before.end() && it->second != sha256_file(d.path)) {
                std::cerr << which << ": " << d.path.string()
                          << " changed since the previous run; its earlier results are not reused\n";
            }
        }
    }

    Stopwatch total;
    RunOutcome outcome;
    if (which == "matrix") {
        outcome = run_matrix(cfg);
    } else if (which == "attack") {
        outcome = run_single_attack(cfg);
    } else {
        outcome = run_feature_sweep(cfg);
    }
    m.config()["snapshot"] = config_snapshot(cfg);
    m.config()["cells"] = outcome.results.size();
    m.config()["executed"] = outcome.executed;
    m.config()["resumed"] = outcome.resumed;
    // timings.jsonl holds wall-clock data, so it is not digested.
    m.output(cfg.output / "results.jsonl");
    m.output(cfg.output / "summary.csv");
    m.timing("total", total.seconds());
    m.write();

    std::size_t absent = 0, failed = 0;
    for (const auto& r : outcome.results) {
        if (r.ok) continue;
        if (r.error.rfind(to_string(ErrorCode::attack_absent), 0) == 0) {
            ++absent;
        } else {
            ++failed;
            std::cerr << which << ": " << r.spec.id << ": " << r.error << '\n';
        }
    }
    std::cerr << which << ": " << outcome.results.size() << " cells (" << outcome.executed << " run, "
              << outcome.resumed << " resumed, " << absent << " attack absent, " << failed << " failed)\n";
    return failed ? kExitData : kExitOk;
}

int cmd_stats(const Options& o, const CLI::App* sub) {
    const fs::path dir = o.out_dir;
    ensure_dir(dir);
    RunManifest m("stats", dir);
    record_options(sub, m);
    Stopwatch total;
    const DatasetTable t = load_table(o.in, o.format);
    m.input(o.in);
    const auto features = o.features.empty() ? t.feature_names() : split_list(o.features);
    {
        auto out = open_out(dir / "unique_values.csv");
        write_unique_counts_csv(unique_value_counts(t, features), out);
    }
    {
        auto out = open_out(dir / "unique_rows.csv");
        out << "label,distinct_rows,rows\n";
        const auto rows = unique_row_counts(t, features);
        const auto counts = t.class_counts();
        for (const auto& [label, n] : rows) {
            const std::vector<std::string> row{label, std::to_string(n), std::to_string(counts.at(label))};
            write_csv_row(out, row);
        }
    }
    {
        auto out = open_out(dir / "class_counts.csv");
        out << class_count_report(t.class_counts(), o.name.empty() ? fs::path(o.in).stem().string() : o.name);
    }
    for (const char* f : {"unique_values.csv", "unique_rows.csv", "class_counts.csv"}) m.output(dir / f);
    m.timing("total", total.seconds());
    m.write();
    return kExitOk;
}

int cmd_viz(const Options& o, const CLI::App* sub) {
    if (!o.pca && (o.x.empty() || o.y.empty())) throw UsageError("viz: give --x and --y, or --pca");
    const fs::path dir = o.out_dir;
    ensure_dir(dir);
    RunManifest m("viz", dir);
    record_options(sub, m);
    Stopwatch total;
    DatasetTable t = load_table(o.in, o.format);
    m.input(o.in);
    if (o.binarize) t = binarize_labels(t);
    DatasetTable fit_table = t;
    if (!o.fit_on.empty()) {
        fit_table = load_table(o.fit_on, o.format);
        m.input(o.fit_on);
    }
    if (o.minmax) {
        const auto p = minmax_fit(fit_table);
        fit_table = minmax_apply(fit_table, p);
        t = minmax_apply(t, p);
    }

    std::vector<Point2> points;
    std::string xl = o.x, yl = o.y;
    if (o.pca) {
        const auto proj = pca_fit(fit_table);
        points = pca_project(t, proj);
        xl = "PC1";
        yl = "PC2";
        {
            auto out = open_out(dir / "projection.csv");
            write_projection_csv(points, t.labels(), out);
        }
        json pj;
        pj["features"] = proj.features;
        pj["mean"] = proj.mean;
        pj["components"] = {proj.components[0], proj.components[1]};
        pj["explained"] = {proj.explained[0], proj.explained[1]};
        {
            auto out = open_out(dir / "pca.json");
            out << pj.dump(2) << '\n';
        }
        m.output(dir / "projection.csv");
        m.output(dir / "pca.json");
    } else {
        const auto cx = t.column_index(o.x), cy = t.column_index(o.y);
        if (!cx || !cy) throw Error(ErrorCode::schema_mismatch, "viz: unknown feature " + (cx ? o.y : o.x));
        points.resize(t.rows());
        for (std::size_t i = 0; i < t.rows(); ++i) points[i] = {t.at(i, *cx), t.at(i, *cy)};
    }

    // Benign first, then the other labels in sorted order.
    std::map<std::string, std::vector<Point2>> groups;
    for (std::size_t i = 0; i < t.rows(); ++i) groups[t.labels()[i]].push_back(points[i]);
    std::vector<std::string> order;
    for (const auto& [label, _] : groups) {
        if (is_benign(label)) order.insert(order.begin(), label);
        else order.push_back(label);
    }

    Figure fig;
    fig.title = o.title;
    fig.x_label = xl;
    fig.y_label = yl;
    fig.max_points = o.max_points;
    KdeConfig kc;
    kc.resolution = o.resolution;
    kc.bandwidth_scale = o.bandwidth_scale;
    kc.jobs = o.jobs;
    json layers = json::array();
    for (const auto& label : order) {
        auto grid = kde_density(groups[label], kc);
        const fs::path file = dir / ("density_" + slug(label) + ".csv");
        {
            auto out = open_out(file);
            write_density_csv(grid, out);
        }
        m.output(file);
        layers.push_back({{"label", label}, {"mode", grid.mode == DensityMode::kde ? "kde" : "scatter"},
                          {"points", groups[label].size()}});
        fig.layers.push_back({label, std::move(grid), {}});
    }
    {
        auto out = open_out(dir / "figure.svg");
        out << render_svg(fig);
    }
    m.output(dir / "figure.svg");
    m.config()["layers"] = layers;
    m.timing("total", total.seconds());
    m.write();
    return kExitOk;
}

void add_jobs(CLI::App* s, Options& o) {
    s->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}
void add_seed(CLI::App* s, Options& o, const std::string& what) {
    s->add_option("--seed", o.seed, "Seed for " + what + "; never derived from the clock");
}
void add_format(CLI::App* s, Options& o) {
    s->add_option("--format", o.format, "Input CSV format: native, cic or auto (schema comment present means native)")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "native", "cic"}));
}

}  // namespace

Cli::Cli() : opts_(std::make_unique<Options>()), app_(std::make_unique<CLI::App>()) {
    auto& app = *app_;
    auto& o = *opts_;
    app.name("nidsgen");
    app.description("Flow-based intrusion detection pipeline: capture decoding, flow features, labeling, dataset "
                    "preparation, feature selection, learners, metrics and cross-dataset experiments.");
    app.set_version_flag("--version", NIDSGEN_VERSION, "Print the tool version and exit");
    app.add_option("--markdown-reference", o.markdown_reference,
                   "Write the Markdown flag and config reference to this path ('-' for stdout) and exit");
    app.require_subcommand(0, 1);

    auto* ex = app.add_subcommand("extract", "Decode a capture and write one feature row per bidirectional flow");
    ex->add_option("--pcap", o.pcap, "Input capture (classic pcap; Ethernet, Linux SLL or raw IP)")->required();
    ex->add_option("--out", o.out, "Output features CSV")->required();
    ex->add_option("--idle-timeout", o.idle_timeout, "Seconds of silence that end a flow")->capture_default_str();
    ex->add_option("--hard-timeout", o.hard_timeout, "Maximum flow duration in seconds; unset means no limit");
    ex->add_option("--activity-timeout", o.activity_timeout, "Gap in seconds separating active periods")
        ->capture_default_str();
    ex->add_option("--reorder-tolerance", o.reorder_tolerance,
                   "Timestamp regressions up to this many seconds are kept unclamped")
        ->capture_default_str();
    add_jobs(ex, o);

    auto* lb = app.add_subcommand("label", "Attach ground-truth labels to extracted flows from an attack schedule");
    lb->add_option("--flows", o.flows, "Features CSV written by extract")->required();
    lb->add_option("--schedule", o.schedule, "Attack schedule CSV: label,start,end,attackers,victims[,ports][,proto]")
        ->required();
    lb->add_option("--out", o.out, "Output labeled CSV; class counts go to <out>.class_counts.csv")->required();
    lb->add_option("--name", o.name, "Dataset name used in the class count report (default: output file stem)");

    auto* pp = app.add_subcommand("prep", "Subsample, binarize, split, one-hot encode and normalise a dataset");
    pp->add_option("--in", o.in, "Input dataset CSV")->required();
    pp->add_option("--out", o.out, "Output dataset CSV (the train side when splitting)")->required();
    add_format(pp, o);
    pp->add_option("--benign-subsample", o.benign_subsample, "Keep every attack row and this many benign rows");
    pp->add_option("--single-attack", o.single_attack, "Keep one attack class plus undersampled benign rows");
    pp->add_option("--ratio", o.ratio, "Benign rows per attack row for --single-attack")->capture_default_str();
    pp->add_flag("--binarize", o.binarize, "Merge all attack labels into Malicious");
    pp->add_option("--split", o.split, "Train fraction of a random train/test split")->check(CLI::Range(0.0, 1.0));
    pp->add_option("--test-out", o.test_out, "Output path of the test side when splitting");
    pp->add_flag("--onehot", o.onehot, "One-hot encode ip_prot, fitted on the (train) output");
    pp->add_option("--rare-threshold", o.rare_threshold, "Protocol frequency below which categories merge")
        ->capture_default_str();
    pp->add_flag("--minmax", o.minmax, "Min-max normalise features, fitted on the (train) output");
    add_seed(pp, o, "subsampling and splitting");

    auto* se = app.add_subcommand("select", "Rank features by minimum redundancy maximum relevance");
    se->add_option("--in", o.in, "Input dataset CSV")->required();
    se->add_option("--out", o.out, "Output ranking CSV")->required();
    se->add_option("--k", o.k, "Number of features to rank; 0 ranks all")->capture_default_str();
    se->add_option("--variant", o.variant, "mid (difference) or miq (quotient)")->capture_default_str();
    se->add_option("--bins", o.bins, "Quantile bins used to discretise features")->capture_default_str();
    se->add_option("--attack", o.attack, "Rank on one attack against undersampled benign traffic");
    se->add_option("--ratio", o.ratio, "Benign rows per attack row for --attack")->capture_default_str();
    add_format(se, o);
    add_seed(se, o, "the single-attack subset");
    add_jobs(se, o);

    auto* tr = app.add_subcommand("train", "Fit one learner family, by grid search or with fixed parameters");
    tr->add_option("--in", o.in, "Training dataset CSV")->required();
    tr->add_option("--out", o.out, "Output model JSON")->required();
    tr->add_option("--family", o.family, "lda, dt, rf or xgb")->required();
    tr->add_option("--grid", o.grid, "table2 (full hyperparameter grid) or default (family defaults)")
        ->capture_default_str();
    tr->add_option("--param", o.params, "Fixed parameter key=value; repeatable; disables the grid search");
    tr->add_option("--ranking", o.ranking, "Ranking CSV from select; restricts training to its features");
    tr->add_option("--k", o.k, "Leading ranked features to keep with --ranking; 0 keeps all")->capture_default_str();
    add_format(tr, o);
    add_seed(tr, o, "model randomness and the grid subset (required)");
    add_jobs(tr, o);

    auto* ev = app.add_subcommand("evaluate", "Score a dataset with a trained model and report MCC, F1 and AUROC");
    ev->add_option("--model", o.model, "Model JSON from train")->required();
    ev->add_option("--in", o.in, "Dataset CSV to score")->required();
    ev->add_option("--out", o.out, "Output metrics JSON")->required();
    ev->add_option("--threshold", o.threshold, "Malicious when the score reaches this value")->capture_default_str();
    ev->add_option("--scores", o.scores, "Optional per-row score CSV");
    add_format(ev, o);

    auto add_experiment = [&](const std::string& name, const std::string& help) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--config", o.config, "Experiment config file (key = value lines); flags override it");
        s->add_option("--output", o.out_dir, "Output directory (config key output)");
        s->add_option("--datasets", o.datasets, "name=path list (config key datasets)");
        s->add_option("--seeds", o.seeds, "Comma-separated seeds (config key seeds)");
        s->add_option("--families", o.families, "Comma-separated families (config key families)");
        s->add_option("--grid", o.grid, "table2 or default (config key grid)");
        s->add_option("--set", o.sets, "Any config key as key=value; repeatable; applied last");
        add_jobs(s, o);
        return s;
    };
    add_experiment("matrix", "Grouped-binary within- and cross-dataset matrix");
    auto* at = add_experiment("attack", "Single-attack experiments with benign undersampling and repetitions");
    at->add_option("--attacks", o.attacks, "Comma-separated attack names (config key attacks)");
    at->add_option("--repetitions", o.repetitions, "Repetitions per cell (config key repetitions)");
    at->add_option("--benign-ratio", o.benign_ratio, "Benign rows per attack row (config key benign_ratio)");
    auto* sw = add_experiment("sweep", "Grouped-binary cells for each mRMR feature count");
    sw->add_option("--k", o.ks, "Comma-separated feature counts (config key mrmr_k)");

    auto* st = app.add_subcommand("stats", "Class counts and distinct value and row counts per label");
    st->add_option("--in", o.in, "Dataset CSV")->required();
    st->add_option("--out-dir", o.out_dir, "Output directory")->required();
    st->add_option("--features", o.features, "Comma-separated features; default all");
    st->add_option("--name", o.name, "Dataset name in the class count report (default: input file stem)");
    add_format(st, o);

    auto* vz = app.add_subcommand("viz", "2D KDE figures of two features or of a PCA projection, one layer per label");
    vz->add_option("--in", o.in, "Dataset CSV")->required();
    vz->add_option("--out-dir", o.out_dir, "Output directory")->required();
    vz->add_option("--x", o.x, "Feature on the horizontal axis");
    vz->add_option("--y", o.y, "Feature on the vertical axis");
    vz->add_flag("--pca", o.pca, "Plot the first two principal components instead of --x/--y");
    vz->add_option("--fit-on", o.fit_on, "Dataset the PCA and normalisation are fitted on (default: --in)");
    vz->add_flag("--minmax", o.minmax, "Min-max normalise before projecting");
    vz->add_flag("--binarize", o.binarize, "Plot Benign against Malicious instead of each label");
    vz->add_option("--resolution", o.resolution, "Density grid cells per axis")->capture_default_str();
    vz->add_option("--bandwidth-scale", o.bandwidth_scale, "Multiplier on the Scott bandwidth factor")
        ->capture_default_str();
    vz->add_option("--max-points", o.max_points, "Scatter layers draw at most about this many points")
        ->capture_default_str();
    vz->add_option("--title", o.title, "Figure title");
    add_format(vz, o);
    add_jobs(vz, o);
}

Cli::~Cli() = default;

CLI::App& Cli::app() { return *app_; }

std::string Cli::markdown_reference() const {
    std::ostringstream md;
    auto cell = [](std::string s) {
        std::string out;
        for (char c : s) out += c == '|' ? std::string("\\|") : std::string(1, c);
        return out;
    };
    auto table = [&](const CLI::App& a) {
        md << "| Flag | Description | Default |\n|---|---|---|\n";
        for (const auto* opt : a.get_options()) {
            std::string name = opt->get_name(false, true);
            if (opt->get_required()) name += " (required)";
            md << "| `" << cell(name) << "` | " << cell(opt->get_description()) << " | "
               << cell(opt->get_default_str()) << " |\n";
        }
        md << '\n';
    };
    md << "# nidsgen command reference\n\n"
       << "Generated by `nidsgen --markdown-reference docs/cli-reference.md`.\n\n"
       << "Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.\n"
       << "No environment variables are read.\n\n"
       << "## Global flags\n\n";
    table(*app_);
    for (const auto* sub : app_->get_subcommands({})) {
        md << "## " << sub->get_name() << "\n\n" << sub->get_description() << "\n\n";
        table(*sub);
    }
    md << "## Experiment config keys\n\n"
       << "Used by `matrix`, `attack` and `sweep`. One `key = value` per line, `#` starts a comment, "
       << "lists are comma-separated. Flags given on the command line win over the file.\n\n"
       << "| Key | Description |\n|---|---|\n";
    for (const auto& [k, d] : config_keys()) md << "| `" << cell(k) << "` | " << cell(d) << " |\n";
    return md.str();
}

int Cli::run(int argc, const char* const* argv) {
    auto& app = *app_;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    const auto& o = *opts_;
    try {
        if (!o.markdown_reference.empty()) {
            if (o.markdown_reference == "-") {
                std::cout << markdown_reference();
            } else {
                auto out = open_out(o.markdown_reference);
                out << markdown_reference();
            }
            return kExitOk;
        }
        const auto subs = app.get_subcommands();
        if (subs.empty()) {
            std::cerr << app.help();
            return kExitUsage;
        }
        const CLI::App* sub = subs.front();
        const std::string name = sub->get_name();
        if (name == "extract") return cmd_extract(o, sub);
        if (name == "label") return cmd_label(o, sub);
        if (name == "prep") return cmd_prep(o, sub);
        if (name == "select") return cmd_select(o, sub);
        if (name == "train") return cmd_train(o, sub);
        if (name == "evaluate") return cmd_evaluate(o, sub);
        if (name == "matrix" || name == "attack" || name == "sweep") return cmd_experiments(name, o, sub);
        if (name == "stats") return cmd_stats(o, sub);
        if (name == "viz") return cmd_viz(o, sub);
        throw std::logic_error("unhandled subcommand " + name);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::invalid_argument ? kExitUsage : kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace nidsgen::cli
