#include "nidsgen/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nidsgen/csv.hpp"
#include "nidsgen/dataset.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/features.hpp"
#include "nidsgen/parallel.hpp"
#include "nidsgen/rng.hpp"

namespace nidsgen {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(TaskKind t) noexcept {
    return t == TaskKind::grouped_binary ? "grouped_binary" : "single_attack";
}

std::string_view to_string(FeatureMode m) noexcept {
    switch (m) {
        case FeatureMode::full: return "full";
        case FeatureMode::mrmr: return "mrmr";
        case FeatureMode::best_two: return "best_two";
    }
    return "?";
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(sep, start);
        const auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!item.empty()) out.push_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
    throw Error(ErrorCode::invalid_argument, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    const std::string s = trim(text);
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad_value(key, text);
    return v;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string detect_format(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open dataset " + path.string());
    std::string first;
    std::getline(in, first);
    return first.rfind("# schema=", 0) == 0 ? "native" : "cic";
}

std::uint64_t file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open dataset " + path.string());
    std::uint64_t h = fnv1a64("");
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    }
    return h;
}

}  // namespace

// ---- config ---------------------------------------------------------------------

const std::vector<std::pair<std::string, std::string>>& config_keys() {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"datasets", "Comma-separated name=path entries. Paths are relative to the config file."},
        {"format.<name>", "native or cic. Default: detected from the schema comment of the file."},
        {"pairs", "Comma-separated train>test pairs. Default: every same-format ordered pair."},
        {"tasks", "grouped_binary and/or single_attack."},
        {"attacks", "Single-attack targets. Default: the full single-attack list."},
        {"families", "Any of lda, dt, rf, xgb. Default: all four."},
        {"seeds", "Comma-separated unsigned seeds. Required."},
        {"feature_modes", "Any of full, mrmr, best_two. Default: full."},
        {"mrmr_k", "Feature counts for mrmr mode. Default: 1,2,3,4,5,10,20."},
        {"grid", "table2 (full hyperparameter grids) or default (family defaults). Default: table2."},
        {"split", "Train fraction of within-dataset splits. Default: 0.8."},
        {"benign_ratio", "Benign rows per attack row in single-attack subsets. Default: 10."},
        {"repetitions", "Single-attack repetitions. Default: 3."},
        {"rare_threshold", "Protocol frequency below which one-hot categories merge. Default: 0.001."},
        {"mi_bins", "Quantile bins for mutual information. Default: 16."},
        {"benign_subsample", "Benign rows kept per dataset before any split. Default: all."},
        {"output", "Output directory for results.jsonl, summary.csv and timings.jsonl."},
        {"jobs", "Worker threads. Default: 1."},
    };
    return keys;
}

void apply_config_value(ExperimentConfig& cfg, std::string_view key_in, std::string_view value_in,
                        const fs::path& base_dir) {
    const std::string key = trim(key_in), value = trim(value_in);
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    if (key == "datasets") {
        cfg.datasets.clear();
        for (const auto& item : split_list(value)) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) bad_value(key, item);
            DatasetSource src{trim(item.substr(0, eq)), resolve(trim(item.substr(eq + 1))), {}};
            for (const auto& d : cfg.datasets) {
                if (d.name == src.name) bad_value(key, item);
            }
            cfg.datasets.push_back(std::move(src));
        }
    } else if (key.rfind("format.", 0) == 0) {
        const std::string name = key.substr(7);
        if (value != "native" && value != "cic") bad_value(key, value);
        auto it = std::find_if(cfg.datasets.begin(), cfg.datasets.end(), [&](const auto& d) { return d.name == name; });
        if (it == cfg.datasets.end()) {
            throw Error(ErrorCode::invalid_argument, "format for undeclared dataset '" + name + "'");
        }
        it->format = value;
    } else if (key == "pairs") {
        cfg.pairs.clear();
        for (const auto& item : split_list(value)) {
            const auto gt = item.find('>');
            if (gt == std::string::npos) bad_value(key, item);
            cfg.pairs.emplace_back(trim(item.substr(0, gt)), trim(item.substr(gt + 1)));
        }
    } else if (key == "tasks") {
        cfg.tasks.clear();
        for (const auto& t : split_list(value)) {
            if (t == "grouped_binary") cfg.tasks.push_back(TaskKind::grouped_binary);
            else if (t == "single_attack") cfg.tasks.push_back(TaskKind::single_attack);
            else bad_value(key, t);
        }
        if (cfg.tasks.empty()) bad_value(key, value);
    } else if (key == "attacks") {
        cfg.attacks = split_list(value);
    } else if (key == "families") {
        cfg.families.clear();
        for (const auto& f : split_list(value)) cfg.families.push_back(parse_family(f));
        if (cfg.families.empty()) bad_value(key, value);
    } else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& s : split_list(value)) cfg.seeds.push_back(parse_number<std::uint64_t>(key, s));
    } else if (key == "feature_modes") {
        cfg.feature_modes.clear();
        for (const auto& m : split_list(value)) {
            if (m == "full") cfg.feature_modes.push_back(FeatureMode::full);
            else if (m == "mrmr") cfg.feature_modes.push_back(FeatureMode::mrmr);
            else if (m == "best_two") cfg.feature_modes.push_back(FeatureMode::best_two);
            else bad_value(key, m);
        }
        if (cfg.feature_modes.empty()) bad_value(key, value);
    } else if (key == "mrmr_k") {
        cfg.mrmr_k.clear();
        for (const auto& k : split_list(value)) {
            cfg.mrmr_k.push_back(parse_number<std::size_t>(key, k));
            if (cfg.mrmr_k.back() == 0) bad_value(key, k);
        }
        if (cfg.mrmr_k.empty()) bad_value(key, value);
    } else if (key == "grid") {
        if (value != "table2" && value != "default") bad_value(key, value);
        cfg.grid = value;
    } else if (key == "split") {
        cfg.split = parse_number<double>(key, value);
        if (!(cfg.split > 0 && cfg.split < 1)) bad_value(key, value);
    } else if (key == "benign_ratio") {
        cfg.benign_ratio = parse_number<std::size_t>(key, value);
    } else if (key == "repetitions") {
        cfg.repetitions = parse_number<std::size_t>(key, value);
        if (cfg.repetitions == 0) bad_value(key, value);
    } else if (key == "rare_threshold") {
        cfg.rare_threshold = parse_number<double>(key, value);
        if (!(cfg.rare_threshold >= 0 && cfg.rare_threshold < 1)) bad_value(key, value);
    } else if (key == "mi_bins") {
        cfg.mi_bins = parse_number<std::size_t>(key, value);
        if (cfg.mi_bins < 2) bad_value(key, value);
    } else if (key == "benign_subsample") {
        if (value.empty() || value == "all") cfg.benign_subsample.reset();
        else cfg.benign_subsample = parse_number<std::size_t>(key, value);
    } else if (key == "output") {
        cfg.output = resolve(value);
    } else if (key == "jobs") {
        cfg.jobs = std::max<std::size_t>(1, parse_number<std::size_t>(key, value));
    } else {
        throw Error(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
    }
}

ExperimentConfig parse_config(std::istream& in, const fs::path& base_dir) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::invalid_argument, "config line " + std::to_string(n) + ": expected key = value");
        }
        try {
            apply_config_value(cfg, body.substr(0, eq), body.substr(eq + 1), base_dir);
        } catch (const Error& e) {
            throw Error(e.code(), "config line " + std::to_string(n) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open config " + path.string());
    return parse_config(in, path.parent_path());
}

std::string config_snapshot(const ExperimentConfig& cfg) {
    std::ostringstream s;
    s << "datasets=";
    for (const auto& d : cfg.datasets) {
        s << d.name << ':' << d.path.filename().string() << ':' << hex64(file_digest(d.path)) << ':'
          << (d.format.empty() ? detect_format(d.path) : d.format) << ';';
    }
    s << "\npairs=";
    for (const auto& [a, b] : cfg.pairs) s << a << '>' << b << ';';
    s << "\ntasks=";
    for (auto t : cfg.tasks) s << to_string(t) << ';';
    s << "\nattacks=";
    for (const auto& a : cfg.attacks) s << a << ';';
    s << "\nfamilies=";
    for (auto f : cfg.families) s << family_name(f) << ';';
    s << "\nseeds=";
    for (auto v : cfg.seeds) s << v << ';';
    s << "\nfeature_modes=";
    for (auto m : cfg.feature_modes) s << to_string(m) << ';';
    s << "\nmrmr_k=";
    for (auto k : cfg.mrmr_k) s << k << ';';
    s << "\ngrid=" << cfg.grid << "\nsplit=" << format_real(cfg.split) << "\nbenign_ratio=" << cfg.benign_ratio
      << "\nrepetitions=" << cfg.repetitions << "\nrare_threshold=" << format_real(cfg.rare_threshold)
      << "\nmi_bins=" << cfg.mi_bins
      << "\nbenign_subsample=" << (cfg.benign_subsample ? std::to_string(*cfg.benign_subsample) : "all") << '\n';
    return s.str();
}

// ---- cells -----------------------------------------------------------------------

namespace {

std::string cell_id(const CellSpec& c, std::size_t seed_value) {
    std::string id = std::string(to_string(c.task));
    if (c.task == TaskKind::single_attack) id += ":" + c.attack;
    id += "|" + std::string(to_string(c.mode));
    if (c.mode != FeatureMode::full) id += ":" + std::to_string(c.k);
    id += "|" + c.train + ">" + c.test + "|" + std::string(family_name(c.family)) + "|seed=" + std::to_string(seed_value);
    return id;
}

const DatasetSource& find_source(const ExperimentConfig& cfg, const std::string& name) {
    for (const auto& d : cfg.datasets) {
        if (d.name == name) return d;
    }
    throw Error(ErrorCode::invalid_argument, "pair references undeclared dataset '" + name + "'");
}

std::string source_format(const DatasetSource& d) { return d.format.empty() ? detect_format(d.path) : d.format; }

std::string listed_attack(std::string_view attack) {
    const auto key = canonical_attack_name(attack);
    for (auto a : kSingleAttacks) {
        if (canonical_attack_name(a) == key) return std::string(a);
    }
    throw Error(ErrorCode::attack_absent, "'" + std::string(attack) + "' is not a single-attack target");
}

}  // namespace

std::vector<CellSpec> enumerate_cells(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) throw Error(ErrorCode::invalid_argument, "seeds is required");
    if (cfg.datasets.empty()) throw Error(ErrorCode::invalid_argument, "datasets is required");

    std::map<std::string, std::string> formats;
    for (const auto& d : cfg.datasets) formats[d.name] = source_format(d);

    std::vector<std::pair<std::string, std::string>> pairs = cfg.pairs;
    if (pairs.empty()) {
        for (const auto& a : cfg.datasets) {
            pairs.emplace_back(a.name, a.name);
            for (const auto& b : cfg.datasets) {
                if (b.name != a.name && formats[b.name] == formats[a.name]) pairs.emplace_back(a.name, b.name);
            }
        }
    }
    for (const auto& [a, b] : pairs) {
        find_source(cfg, a);
        find_source(cfg, b);
        if (formats[a] != formats[b]) {
            throw Error(ErrorCode::schema_incompatible,
                        a + " (" + formats[a] + ") cannot be paired with " + b + " (" + formats[b] + ")");
        }
    }

    std::vector<std::string> attacks;
    for (const auto& a : cfg.attacks) attacks.push_back(listed_attack(a));
    if (attacks.empty()) attacks.assign(std::begin(kSingleAttacks), std::end(kSingleAttacks));

    std::vector<CellSpec> cells;
    for (auto task : cfg.tasks) {
        const std::vector<std::string> task_attacks =
            task == TaskKind::single_attack ? attacks : std::vector<std::string>{std::string()};
        for (const auto& attack : task_attacks) {
            for (auto mode : cfg.feature_modes) {
                std::vector<std::size_t> ks{0};
                if (mode == FeatureMode::mrmr) ks = cfg.mrmr_k;
                if (mode == FeatureMode::best_two) ks = {2};
                for (auto k : ks) {
                    for (auto seed : cfg.seeds) {
                        for (const auto& [train, test] : pairs) {
                            for (auto family : cfg.families) {
                                CellSpec c;
                                c.train = train;
                                c.test = test;
                                c.family = family;
                                c.task = task;
                                c.attack = attack;
                                c.mode = mode;
                                c.k = k;
                                c.seed = seed;
                                c.repetitions = task == TaskKind::single_attack ? cfg.repetitions : 1;
                                c.id = cell_id(c, seed);
                                cells.push_back(std::move(c));
                            }
                        }
                    }
                }
            }
        }
    }
    return cells;
}

std::size_t max_mcc_repetition(const std::vector<RepetitionResult>& reps) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < reps.size(); ++i) {
        if (reps[i].metrics.mcc > reps[best].metrics.mcc) best = i;
    }
    return best;
}

// ---- records ---------------------------------------------------------------------

namespace {

json metrics_json(const MetricsReport& m) {
    json j{{"tp", m.counts.tp}, {"tn", m.counts.tn}, {"fp", m.counts.fp}, {"fn", m.counts.fn},
           {"mcc", m.mcc},      {"f1", m.f1}};
    j["auroc"] = m.auroc ? json(*m.auroc) : json(nullptr);
    return j;
}

MetricsReport metrics_from(const json& j) {
    MetricsReport m;
    m.counts.tp = j.at("tp").get<std::uint64_t>();
    m.counts.tn = j.at("tn").get<std::uint64_t>();
    m.counts.fp = j.at("fp").get<std::uint64_t>();
    m.counts.fn = j.at("fn").get<std::uint64_t>();
    m.mcc = j.at("mcc").get<double>();
    m.f1 = j.at("f1").get<double>();
    if (!j.at("auroc").is_null()) m.auroc = j.at("auroc").get<double>();
    return m;
}

json provenance_json(const Provenance& p) {
    json transforms = json::array();
    for (const auto& t : p.transforms) {
        transforms.push_back({{"op", t.op}, {"params", json::parse(t.params_json)}});
    }
    return {{"source", p.source}, {"transforms", transforms}};
}

}  // namespace

std::string result_to_json(const CellResult& r) {
    const auto& c = r.spec;
    json reps = json::array();
    for (const auto& rep : r.repetitions) {
        reps.push_back({{"rep", rep.rep},
                        {"seed", rep.seed},
                        {"params", rep.params},
                        {"validation_mcc", rep.validation_mcc},
                        {"features", rep.features},
                        {"source_counts", rep.source_counts},
                        {"train_counts", rep.train_counts},
                        {"test_counts", rep.test_counts},
                        {"metrics", metrics_json(rep.metrics)}});
    }
    json j{{"id", c.id},
           {"train", c.train},
           {"test", c.test},
           {"cross", c.cross()},
           {"family", family_name(c.family)},
           {"task", to_string(c.task)},
           {"attack", c.attack},
           {"feature_mode", to_string(c.mode)},
           {"k", c.k},
           {"seed", c.seed},
           {"config_hash", r.config_hash},
           {"status", r.ok ? "ok" : "error"},
           {"error", r.error},
           {"warning", r.warning},
           {"repetitions", reps},
           {"schema_hash", r.schema_hash},
           {"provenance",
            {{"train", r.train_provenance.empty() ? json(nullptr) : json::parse(r.train_provenance)},
             {"test", r.test_provenance.empty() ? json(nullptr) : json::parse(r.test_provenance)}}}};
    if (r.ok && !r.repetitions.empty()) {
        j["aggregate"] = {{"rep", r.aggregate}, {"metrics", metrics_json(r.repetitions[r.aggregate].metrics)}};
    } else {
        j["aggregate"] = nullptr;
    }
    return j.dump();
}

CellResult result_from_json(std::string_view line) {
    try {
        const json j = json::parse(line);
        CellResult r;
        auto& c = r.spec;
        c.id = j.at("id").get<std::string>();
        c.train = j.at("train").get<std::string>();
        c.test = j.at("test").get<std::string>();
        c.family = parse_family(j.at("family").get<std::string>());
        c.task = j.at("task").get<std::string>() == "single_attack" ? TaskKind::single_attack : TaskKind::grouped_binary;
        c.attack = j.at("attack").get<std::string>();
        const auto mode = j.at("feature_mode").get<std::string>();
        c.mode = mode == "mrmr" ? FeatureMode::mrmr : mode == "best_two" ? FeatureMode::best_two : FeatureMode::full;
        c.k = j.at("k").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.ok = j.at("status").get<std::string>() == "ok";
        r.error = j.at("error").get<std::string>();
        r.warning = j.value("warning", std::string{});
        for (const auto& rj : j.at("repetitions")) {
            RepetitionResult rep;
            rep.rep = rj.at("rep").get<std::size_t>();
            rep.seed = rj.at("seed").get<std::uint64_t>();
            rep.params = rj.at("params").get<ParamMap>();
            rep.validation_mcc = rj.at("validation_mcc").get<double>();
            rep.features = rj.at("features").get<std::vector<std::string>>();
            rep.source_counts = rj.at("source_counts").get<std::map<std::string, std::map<std::string, std::size_t>>>();
            rep.train_counts = rj.at("train_counts").get<std::map<std::string, std::size_t>>();
            rep.test_counts = rj.at("test_counts").get<std::map<std::string, std::size_t>>();
            rep.metrics = metrics_from(rj.at("metrics"));
            r.repetitions.push_back(std::move(rep));
        }
        c.repetitions = r.repetitions.size();
        if (!j.at("aggregate").is_null()) r.aggregate = j.at("aggregate").at("rep").get<std::size_t>();
        r.schema_hash = j.at("schema_hash").get<std::string>();
        const auto& prov = j.at("provenance");
        if (!prov.at("train").is_null()) r.train_provenance = prov.at("train").dump();
        if (!prov.at("test").is_null()) r.test_provenance = prov.at("test").dump();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("results record: ") + e.what());
    }
}

// ---- running ---------------------------------------------------------------------

namespace {

/// Computes each keyed value once, even under concurrent requests.
template <typename T>
class Memo {
public:
    template <typename Fn>
    const T& get(const std::string& key, Fn&& fn) {
        std::shared_ptr<Entry> e;
        {
            std::lock_guard lock(mutex_);
            auto& slot = entries_[key];
            if (!slot) slot = std::make_shared<Entry>();
            e = slot;
        }
        std::call_once(e->once, [&] {
            try {
                e->value = std::make_unique<T>(fn());
            } catch (...) {
                e->error = std::current_exception();
            }
        });
        if (e->error) std::rethrow_exception(e->error);
        return *e->value;
    }

private:
    struct Entry {
        std::once_flag once;
        std::unique_ptr<T> value;
        std::exception_ptr error;
    };
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

struct LoadedSource {
    DatasetTable table;
    std::string format;
    std::string schema_hash;
};

struct Prepared {
    DatasetTable train;
    DatasetTable test;
    std::map<std::string, std::map<std::string, std::size_t>> source_counts;
    std::string schema_hash;
};

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg) {}

    CellResult run(const CellSpec& cell, const std::string& config_hash, std::size_t inner_jobs) {
        CellResult r;
        r.spec = cell;
        r.config_hash = config_hash;
        const auto start = std::chrono::steady_clock::now();
        try {
            for (std::size_t rep = 0; rep < cell.repetitions; ++rep) {
                r.repetitions.push_back(run_repetition(cell, rep, inner_jobs, r));
            }
            r.aggregate = max_mcc_repetition(r.repetitions);
        } catch (const Error& e) {
            r.ok = false;
            r.error = e.what();
            r.repetitions.clear();
            r.aggregate = 0;
        }
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return r;
    }

private:
    const LoadedSource& source(const std::string& name) {
        return sources_.get(name, [&] {
            const auto& d = find_source(cfg_, name);
            LoadedSource s;
            s.format = source_format(d);
            CsvLoadOptions opt;
            if (s.format == "cic") {
                opt.exclude_columns = cic_excluded_columns();
                opt.cic_canonical_names = true;
            }
            s.table = load_csv(d.path, opt);
            const auto& model = model_schema();
            if (s.table.feature_names() == model.names()) {
                s.schema_hash = model.hash_hex();
            } else {
                std::string joined;
                for (const auto& n : s.table.feature_names()) joined += n + "\n";
                s.schema_hash = hex64(fnv1a64(joined));
            }
            return s;
        });
    }

    /// Source table after optional benign subsampling, per seed.
    const DatasetTable& base(const std::string& name, std::uint64_t seed) {
        return bases_.get(name + "|" + std::to_string(seed), [&] {
            const auto& s = source(name);
            if (!cfg_.benign_subsample) return s.table;
            return subsample_benign(s.table, *cfg_.benign_subsample,
                                    derive_seed(seed, {"benign-subsample", name}));
        });
    }

    const Prepared& prepared(const CellSpec& c, std::size_t rep) {
        const std::string key = std::string(to_string(c.task)) + "|" + c.attack + "|" + c.train + ">" + c.test +
                                "|" + std::to_string(c.seed) + "|" + std::to_string(rep);
        return prepared_.get(key, [&] {
            const auto& src_train = source(c.train);
            const auto& src_test = source(c.test);
            if (src_train.table.feature_names() != src_test.table.feature_names()) {
                throw Error(ErrorCode::schema_incompatible, c.train + " and " + c.test + " have different columns");
            }
            const std::string rep_s = std::to_string(rep);
            Prepared p;
            p.schema_hash = src_train.schema_hash;
            auto subset = [&](const std::string& name) {
                DatasetTable t = base(name, c.seed);
                if (c.task == TaskKind::single_attack) {
                    if (canonical_attack_name(c.attack) == canonical_attack_name(kCicOnlyAttack) &&
                        source(name).format != "cic") {
                        throw Error(ErrorCode::attack_absent, c.attack + " is evaluated on CIC sources only");
                    }
                    try {
                        t = single_attack_subset(t, c.attack, cfg_.benign_ratio,
                                                 derive_seed(c.seed, {"subset", name, c.attack, rep_s}));
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::unknown_attack) throw;
                        throw Error(ErrorCode::attack_absent, c.attack + " absent from " + name);
                    }
                }
                p.source_counts[name] = t.class_counts();
                return binarize_labels(t);
            };
            DatasetTable train, test;
            if (!c.cross()) {
                const auto whole = subset(c.train);
                const auto split_seed = derive_seed(c.seed, {"split", c.train, to_string(c.task), c.attack, rep_s});
                std::tie(train, test) = split_train_test(whole, cfg_.split, split_seed);
            } else {
                train = subset(c.train);
                test = subset(c.test);
            }
            if (train.column_index("ip_prot")) {
                const auto oh = onehot_fit(train, "ip_prot", cfg_.rare_threshold);
                train = onehot_apply(train, oh);
                test = onehot_apply(test, oh);
            }
            const auto mm = minmax_fit(train);
            p.train = minmax_apply(train, mm);
            p.test = minmax_apply(test, mm);
            return p;
        });
    }

    std::size_t ranking_depth(const Prepared& p) const {
        std::size_t k = 2;
        for (auto v : cfg_.mrmr_k) k = std::max(k, v);
        return std::min(k, p.train.cols());
    }

    const FeatureRanking& ranking(const CellSpec& c, std::size_t rep, const Prepared& p) {
        const std::string key = std::string(to_string(c.task)) + "|" + c.attack + "|" + c.train + ">" + c.test +
                                "|" + std::to_string(c.seed) + "|" + std::to_string(rep);
        return rankings_.get(key, [&] {
            MrmrConfig mc;
            mc.bins = cfg_.mi_bins;
            return mrmr_rank(p.train, ranking_depth(p), mc);
        });
    }

    RepetitionResult run_repetition(const CellSpec& c, std::size_t rep, std::size_t jobs, CellResult& r) {
        const Prepared& p = prepared(c, rep);
        r.schema_hash = p.schema_hash;
        DatasetTable train = p.train, test = p.test;
        RepetitionResult out;
        out.rep = rep;
        if (c.mode != FeatureMode::full) {
            if (c.k > p.train.cols()) {
                throw Error(ErrorCode::k_out_of_range, "k=" + std::to_string(c.k) + " exceeds " +
                                                           std::to_string(p.train.cols()) + " features");
            }
            const auto& rk = ranking(c, rep, p);
            const std::vector<std::size_t> counts{c.k};
            const auto names = sweep_counts(rk, counts).front();
            train = select_columns(train, names);
            test = select_columns(test, names);
        }
        out.features = train.feature_names();
        out.source_counts = p.source_counts;
        out.train_counts = train.class_counts();
        out.test_counts = test.class_counts();
        out.seed = derive_seed(c.seed, {"model", c.train, c.test, family_name(c.family), to_string(c.task), c.attack,
                                        to_string(c.mode), std::to_string(c.k), std::to_string(rep)});

        ParamGrid grid;
        if (cfg_.grid == "table2") {
            grid = search_grid(c.family);
        } else {
            for (const auto& [k, v] : default_params(c.family)) grid.push_back({k, {v}});
        }
        GridSearchConfig gc;
        gc.jobs = jobs;
        const auto gs = grid_search(c.family, grid, train, out.seed, gc);
        out.params = gs.best;
        out.validation_mcc = gs.best_score;
        if (!gs.model.warning().empty()) r.warning = gs.model.warning();

        const auto pred = predict(gs.model, test);
        out.metrics = evaluate(pred.scores, test.binary_targets());
        r.train_provenance = provenance_json(train.provenance()).dump();
        r.test_provenance = provenance_json(test.provenance()).dump();
        return out;
    }

    const ExperimentConfig& cfg_;
    Memo<LoadedSource> sources_;
    Memo<DatasetTable> bases_;
    Memo<Prepared> prepared_;
    Memo<FeatureRanking> rankings_;
};

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
    return buf;
}

void write_file_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

}  // namespace

void write_summary_csv(const std::vector<CellResult>& results, std::ostream& out) {
    bool attack = false, features = false;
    for (const auto& r : results) {
        attack |= r.spec.task == TaskKind::single_attack;
        features |= r.spec.mode != FeatureMode::full;
    }
    std::vector<std::string> header{"Train set", "Test set", "Classifier"};
    if (attack) header.emplace_back("Attack");
    if (features) header.emplace_back("Features");
    for (const char* h : {"MCC", "F1", "AUROC"}) header.emplace_back(h);
    write_csv_row(out, header);
    for (const auto& r : results) {
        std::string fam(family_name(r.spec.family));
        for (auto& ch : fam) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        std::vector<std::string> row{r.spec.train, r.spec.test, fam};
        if (attack) row.push_back(r.spec.attack);
        if (features) row.push_back(r.spec.mode == FeatureMode::full ? "all" : std::to_string(r.spec.k));
        if (const auto* m = r.reported()) {
            row.push_back(percent(m->mcc));
            row.push_back(percent(m->f1));
            row.push_back(m->auroc ? percent(*m->auroc) : "NA");
        } else {
            row.insert(row.end(), {"NA", "NA", "NA"});
        }
        write_csv_row(out, row);
    }
}

RunOutcome run_experiments(const ExperimentConfig& cfg) {
    if (cfg.output.empty()) throw Error(ErrorCode::invalid_argument, "output directory is required");
    const auto cells = enumerate_cells(cfg);
    const std::string config_hash = hex64(fnv1a64(config_snapshot(cfg)));
    fs::create_directories(cfg.output);
    const fs::path results_path = cfg.output / "results.jsonl";

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < cells.size(); ++i) index[cells[i].id] = i;

    RunOutcome outcome;
    outcome.results.resize(cells.size());
    std::vector<std::string> lines(cells.size());
    std::vector<bool> done(cells.size(), false);
    {
        std::ifstream in(results_path);
        std::string line;
        while (std::getline(in, line)) {
            CellResult r;
            try {
                r = result_from_json(line);
            } catch (const Error&) {
                continue;  // torn write from an interrupted run
            }
            auto it = index.find(r.spec.id);
            if (it == index.end() || r.config_hash != config_hash || done[it->second]) continue;
            r.spec = cells[it->second];
            outcome.results[it->second] = std::move(r);
            lines[it->second] = line;
            done[it->second] = true;
            ++outcome.resumed;
        }
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!done[i]) todo.push_back(i);
    }
    const std::size_t outer = std::max<std::size_t>(1, std::min(cfg.jobs, todo.size()));
    const std::size_t inner = std::max<std::size_t>(1, cfg.jobs / outer);

    std::ofstream sink(results_path, std::ios::app);
    if (!sink) throw Error(ErrorCode::io_error, "cannot write " + results_path.string());
    std::mutex sink_mutex;
    Runner runner(cfg);
    parallel_for(todo.size(), outer, [&](std::size_t t) {
        const std::size_t i = todo[t];
        CellResult r = runner.run(cells[i], config_hash, inner);
        std::string line = result_to_json(r);
        std::lock_guard lock(sink_mutex);
        sink << line << '\n';
        sink.flush();
        lines[i] = std::move(line);
        outcome.results[i] = std::move(r);
    });
    sink.close();
    outcome.executed = todo.size();

    std::string all;
    for (const auto& l : lines) all += l + "\n";
    write_file_atomically(results_path, all);

    std::ostringstream summary;
    write_summary_csv(outcome.results, summary);
    write_file_atomically(cfg.output / "summary.csv", summary.str());

    std::string timings;
    for (std::size_t i : todo) {
        timings += json{{"id", cells[i].id}, {"wall_seconds", outcome.results[i].wall_seconds}}.dump() + "\n";
    }
    write_file_atomically(cfg.output / "timings.jsonl", timings);
    return outcome;
}

RunOutcome run_matrix(ExperimentConfig cfg) {
    cfg.tasks = {TaskKind::grouped_binary};
    return run_experiments(cfg);
}

RunOutcome run_single_attack(ExperimentConfig cfg) {
    cfg.tasks = {TaskKind::single_attack};
    return run_experiments(cfg);
}

RunOutcome run_feature_sweep(ExperimentConfig cfg) {
    cfg.tasks = {TaskKind::grouped_binary};
    cfg.feature_modes = {FeatureMode::mrmr};
    return run_experiments(cfg);
}

}  // namespace nidsgen
