#include "nidsgen/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nidsgen/csv.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/features.hpp"
#include "nidsgen/rng.hpp"

namespace nidsgen {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_cell(std::string_view cell, bool& nonfinite) {
    nonfinite = false;
    std::string t = trim(cell);
    if (t.empty()) {
        nonfinite = true;
        return 0.0;
    }
    const std::string l = lower(t);
    if (l == "infinity" || l == "+infinity" || l == "-infinity" || l == "inf" || l == "+inf" || l == "-inf" ||
        l == "nan" || l == "-nan") {
        nonfinite = true;
        return 0.0;
    }
    const char* first = t.data();
    if (*first == '+') ++first;
    double v = 0;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    if (!std::isfinite(v)) {
        nonfinite = true;
        return 0.0;
    }
    return v;
}

TransformRecord record(std::string op, const json& params) { return {std::move(op), params.dump()}; }

}  // namespace

bool is_benign(std::string_view label) { return lower(trim(label)) == "benign"; }

DatasetTable::DatasetTable(std::vector<std::string> feature_names, std::vector<double> values,
                           std::vector<std::string> labels, Provenance provenance)
    : names_(std::move(feature_names)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      provenance_(std::move(provenance)) {
    if (values_.size() != names_.size() * labels_.size()) {
        throw Error(ErrorCode::invalid_argument, "table has " + std::to_string(values_.size()) + " values for " +
                                                     std::to_string(labels_.size()) + " rows x " +
                                                     std::to_string(names_.size()) + " columns");
    }
}

std::vector<double> DatasetTable::column(std::size_t j) const {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, j);
    return out;
}

std::optional<std::size_t> DatasetTable::column_index(std::string_view name) const {
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (names_[j] == name) return j;
    }
    return std::nullopt;
}

std::vector<std::uint8_t> DatasetTable::binary_targets() const {
    std::vector<std::uint8_t> y(rows());
    for (std::size_t i = 0; i < rows(); ++i) y[i] = is_benign(labels_[i]) ? 0 : 1;
    return y;
}

std::map<std::string, std::size_t> DatasetTable::class_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& l : labels_) ++counts[l];
    return counts;
}

DatasetTable DatasetTable::take_rows(std::span<const std::size_t> indices) const {
    std::vector<double> vals;
    vals.reserve(indices.size() * cols());
    std::vector<std::string> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) {
        auto r = row(i);
        vals.insert(vals.end(), r.begin(), r.end());
        labels.push_back(labels_[i]);
    }
    return DatasetTable(names_, std::move(vals), std::move(labels), provenance_);
}

DatasetTable DatasetTable::with_record(TransformRecord rec) const {
    DatasetTable t = *this;
    t.provenance_.transforms.push_back(std::move(rec));
    return t;
}

// ---- CSV ------------------------------------------------------------------

std::vector<std::string> cic_excluded_columns() {
    return {"Flow ID", "Source IP", "Src IP", "Source Port", "Src Port", "Destination IP", "Dst IP", "Protocol",
            "Timestamp", "Fwd Header Length.1"};
}

std::string cic_canonical_column(std::string_view name) {
    static const std::map<std::string, std::string, std::less<>> renames = {
        {"Dst Port", "Destination Port"},
        {"Src IP", "Source IP"},
        {"Src Port", "Source Port"},
        {"Dst IP", "Destination IP"},
        {"Tot Fwd Pkts", "Total Fwd Packets"},
        {"Tot Bwd Pkts", "Total Backward Packets"},
        {"TotLen Fwd Pkts", "Total Length of Fwd Packets"},
        {"TotLen Bwd Pkts", "Total Length of Bwd Packets"},
        {"Fwd Pkt Len Max", "Fwd Packet Length Max"},
        {"Fwd Pkt Len Min", "Fwd Packet Length Min"},
        {"Fwd Pkt Len Mean", "Fwd Packet Length Mean"},
        {"Fwd Pkt Len Std", "Fwd Packet Length Std"},
        {"Bwd Pkt Len Max", "Bwd Packet Length Max"},
        {"Bwd Pkt Len Min", "Bwd Packet Length Min"},
        {"Bwd Pkt Len Mean", "Bwd Packet Length Mean"},
        {"Bwd Pkt Len Std", "Bwd Packet Length Std"},
        {"Flow Byts/s", "Flow Bytes/s"},
        {"Flow Pkts/s", "Flow Packets/s"},
        {"Fwd IAT Tot", "Fwd IAT Total"},
        {"Bwd IAT Tot", "Bwd IAT Total"},
        {"Fwd Header Len", "Fwd Header Length"},
        {"Bwd Header Len", "Bwd Header Length"},
        {"Fwd Pkts/s", "Fwd Packets/s"},
        {"Bwd Pkts/s", "Bwd Packets/s"},
        {"Pkt Len Min", "Min Packet Length"},
        {"Pkt Len Max", "Max Packet Length"},
        {"Pkt Len Mean", "Packet Length Mean"},
        {"Pkt Len Std", "Packet Length Std"},
        {"Pkt Len Var", "Packet Length Variance"},
        {"FIN Flag Cnt", "FIN Flag Count"},
        {"SYN Flag Cnt", "SYN Flag Count"},
        {"RST Flag Cnt", "RST Flag Count"},
        {"PSH Flag Cnt", "PSH Flag Count"},
        {"ACK Flag Cnt", "ACK Flag Count"},
        {"URG Flag Cnt", "URG Flag Count"},
        {"CWE Flag Cnt", "CWE Flag Count"},
        {"ECE Flag Cnt", "ECE Flag Count"},
        {"Pkt Size Avg", "Average Packet Size"},
        {"Fwd Seg Size Avg", "Avg Fwd Segment Size"},
        {"Bwd Seg Size Avg", "Avg Bwd Segment Size"},
        {"Fwd Byts/b Avg", "Fwd Avg Bytes/Bulk"},
        {"Fwd Pkts/b Avg", "Fwd Avg Packets/Bulk"},
        {"Fwd Blk Rate Avg", "Fwd Avg Bulk Rate"},
        {"Bwd Byts/b Avg", "Bwd Avg Bytes/Bulk"},
        {"Bwd Pkts/b Avg", "Bwd Avg Packets/Bulk"},
        {"Bwd Blk Rate Avg", "Bwd Avg Bulk Rate"},
        {"Subflow Fwd Pkts", "Subflow Fwd Packets"},
        {"Subflow Fwd Byts", "Subflow Fwd Bytes"},
        {"Subflow Bwd Pkts", "Subflow Bwd Packets"},
        {"Subflow Bwd Byts", "Subflow Bwd Bytes"},
        {"Init Fwd Win Byts", "Init_Win_bytes_forward"},
        {"Init Bwd Win Byts", "Init_Win_bytes_backward"},
        {"Fwd Act Data Pkts", "act_data_pkt_fwd"},
        {"Fwd Seg Size Min", "min_seg_size_forward"},
    };
    auto it = renames.find(name);
    return it == renames.end() ? std::string(name) : it->second;
}

DatasetTable read_csv(std::istream& in, const std::string& source, const CsvLoadOptions& options, LoadReport* report) {
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw Error(ErrorCode::header_mismatch, source + ": no header row");
    for (auto& h : header) h = trim(h);
    if (options.cic_canonical_names) {
        for (auto& h : header) h = cic_canonical_column(h);
    }

    // A schema comment pins the exact header.
    for (const auto& c : reader.comments()) {
        const auto pos = c.find("hash=");
        if (c.rfind("# schema=", 0) != 0 || pos == std::string::npos) continue;
        const std::string hash = trim(c.substr(pos + 5));
        const FeatureSchema* schema = nullptr;
        for (const FeatureSchema* s : {&extraction_schema(), &model_schema()}) {
            if (s->hash_hex() == hash) schema = s;
        }
        if (!schema) throw Error(ErrorCode::header_mismatch, source + ": unknown feature schema hash " + hash);
        auto expected = schema->names();
        std::vector<std::string> got;
        for (const auto& h : header) {
            if (lower(h) != lower(options.label_column)) got.push_back(h);
        }
        if (got != expected) {
            throw Error(ErrorCode::header_mismatch, source + ": header does not match schema " + schema->version());
        }
    }

    std::optional<std::size_t> label_idx;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (lower(header[j]) == lower(trim(options.label_column))) label_idx = j;
    }
    if (!label_idx) {
        throw Error(ErrorCode::header_mismatch, source + ": no '" + trim(options.label_column) + "' column");
    }
    std::set<std::string> exclude(options.exclude_columns.begin(), options.exclude_columns.end());
    for (auto id : kIdentifierColumns) exclude.insert(std::string(id));

    std::vector<std::size_t> keep;
    std::vector<std::string> names;
    LoadReport local;
    {
        std::set<std::string> seen;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (label_idx && j == *label_idx) continue;
            if (exclude.count(header[j])) {
                local.dropped_columns.push_back(header[j]);
                continue;
            }
            if (!seen.insert(header[j]).second) {
                throw Error(ErrorCode::header_mismatch, source + ": duplicate column '" + header[j] + "'");
            }
            keep.push_back(j);
            names.push_back(header[j]);
        }
    }
    if (options.expected_columns && names != *options.expected_columns) {
        throw Error(ErrorCode::header_mismatch, source + ": columns differ from the expected column map");
    }

    std::vector<std::size_t> nonfinite(names.size(), 0);
    std::vector<double> values;
    std::vector<std::string> labels;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::ragged_row, source + ":" + std::to_string(reader.line()) + ": " +
                                                   std::to_string(fields.size()) + " cells, header has " +
                                                   std::to_string(header.size()));
        }
        for (std::size_t k = 0; k < keep.size(); ++k) {
            bool nf = false;
            auto v = parse_cell(fields[keep[k]], nf);
            if (!v) {
                throw Error(ErrorCode::parse_error, source + ":" + std::to_string(reader.line()) + ": column '" +
                                                        names[k] + "' has non-numeric value '" + fields[keep[k]] + "'");
            }
            if (nf) ++nonfinite[k];
            values.push_back(*v);
        }
        labels.push_back(trim(fields[*label_idx]));
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (nonfinite[k]) {
            local.nonfinite_by_column.emplace_back(names[k], nonfinite[k]);
            local.nonfinite_total += nonfinite[k];
        }
    }
    if (report) *report = std::move(local);
    Provenance prov;
    prov.source = source;
    return DatasetTable(std::move(names), std::move(values), std::move(labels), std::move(prov));
}

DatasetTable load_csv(const std::filesystem::path& path, const CsvLoadOptions& options, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    return read_csv(in, path.filename().string(), options, report);
}

void write_csv(const DatasetTable& table, std::ostream& out) {
    std::vector<std::string> row = table.feature_names();
    row.emplace_back("label");
    write_csv_row(out, row);
    for (std::size_t i = 0; i < table.rows(); ++i) {
        row.clear();
        for (double v : table.row(i)) row.push_back(format_real(v));
        row.push_back(table.labels()[i]);
        write_csv_row(out, row);
    }
}

void save_csv(const DatasetTable& table, const std::filesystem::path& path) {
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
        write_csv(table, out);
    }
    std::ofstream prov(path.string() + ".provenance.jsonl", std::ios::trunc);
    if (!prov) throw Error(ErrorCode::io_error, "cannot write provenance for " + path.string());
    prov << serialize_provenance(table.provenance());
}

std::string serialize_provenance(const Provenance& p) {
    std::string out = json{{"source", p.source}}.dump() + "\n";
    for (const auto& t : p.transforms) {
        json line{{"op", t.op}, {"params", json::parse(t.params_json)}};
        out += line.dump() + "\n";
    }
    return out;
}

Provenance parse_provenance(std::istream& in) {
    Provenance p;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line);
        if (first) {
            p.source = j.at("source").get<std::string>();
            first = false;
            continue;
        }
        p.transforms.push_back({j.at("op").get<std::string>(), j.at("params").dump()});
    }
    return p;
}

// ---- transforms -----------------------------------------------------------

MinMaxParams minmax_fit(const DatasetTable& train) {
    MinMaxParams p;
    p.features = train.feature_names();
    p.min.assign(train.cols(), 0.0);
    p.max.assign(train.cols(), 0.0);
    for (std::size_t j = 0; j < train.cols(); ++j) {
        if (train.rows() == 0) continue;
        double lo = train.at(0, j), hi = lo;
        for (std::size_t i = 1; i < train.rows(); ++i) {
            lo = std::min(lo, train.at(i, j));
            hi = std::max(hi, train.at(i, j));
        }
        p.min[j] = lo;
        p.max[j] = hi;
    }
    return p;
}

DatasetTable minmax_apply(const DatasetTable& table, const MinMaxParams& params) {
    if (params.features != table.feature_names()) {
        throw Error(ErrorCode::schema_mismatch, "min-max parameters were fit on different columns");
    }
    std::vector<double> vals = table.values();
    const std::size_t d = table.cols();
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double range = params.max[j] - params.min[j];
            double& x = vals[i * d + j];
            x = range > 0 ? (x - params.min[j]) / range : 0.0;
        }
    }
    DatasetTable out(table.feature_names(), std::move(vals), table.labels(), table.provenance());
    return out.with_record(record("minmax", {{"features", params.features}, {"min", params.min}, {"max", params.max}}));
}

OneHotParams onehot_fit(const DatasetTable& table, std::string_view column, double rare_threshold) {
    const auto idx = table.column_index(column);
    if (!idx) throw Error(ErrorCode::invalid_argument, "no column '" + std::string(column) + "' to one-hot encode");
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 0; i < table.rows(); ++i) ++counts[std::llround(table.at(i, *idx))];
    const double n = static_cast<double>(table.rows());
    std::vector<std::pair<std::int64_t, std::size_t>> frequent;
    OneHotParams p;
    p.column = std::string(column);
    for (const auto& [code, count] : counts) {
        // Relative slack keeps an exact-threshold frequency on the kept side.
        if (static_cast<double>(count) >= rare_threshold * n * (1.0 - 1e-12)) {
            frequent.emplace_back(code, count);
        } else {
            p.has_other = true;
        }
    }
    std::stable_sort(frequent.begin(), frequent.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& f : frequent) p.codes.push_back(f.first);
    return p;
}

DatasetTable onehot_apply(const DatasetTable& table, const OneHotParams& params) {
    const auto idx = table.column_index(params.column);
    if (!idx) throw Error(ErrorCode::schema_mismatch, "no column '" + params.column + "' to one-hot encode");
    std::vector<std::string> names;
    for (std::size_t j = 0; j < table.cols(); ++j) {
        if (j != *idx) {
            names.push_back(table.feature_names()[j]);
            continue;
        }
        for (auto code : params.codes) names.push_back(params.column + "_" + std::to_string(code));
        if (params.has_other) names.push_back(params.column + "_other");
    }
    const std::size_t width = params.codes.size() + (params.has_other ? 1 : 0);
    std::vector<double> vals;
    vals.reserve(table.rows() * names.size());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j) {
            if (j != *idx) {
                vals.push_back(table.at(i, j));
                continue;
            }
            const auto code = std::llround(table.at(i, j));
            const auto it = std::find(params.codes.begin(), params.codes.end(), code);
            for (std::size_t k = 0; k < width; ++k) vals.push_back(0.0);
            double* slot = vals.data() + vals.size() - width;
            if (it != params.codes.end()) {
                slot[it - params.codes.begin()] = 1.0;
            } else if (params.has_other) {
                slot[width - 1] = 1.0;
            }
        }
    }
    DatasetTable out(std::move(names), std::move(vals), table.labels(), table.provenance());
    return out.with_record(
        record("onehot", {{"column", params.column}, {"codes", params.codes}, {"other", params.has_other}}));
}

DatasetTable onehot_protocol(const DatasetTable& table, double rare_threshold) {
    return onehot_apply(table, onehot_fit(table, "ip_prot", rare_threshold));
}

DatasetTable binarize_labels(const DatasetTable& table) {
    std::vector<std::string> labels;
    labels.reserve(table.rows());
    for (const auto& l : table.labels()) labels.emplace_back(is_benign(l) ? kBenignLabel : kMaliciousLabel);
    DatasetTable out(table.feature_names(), table.values(), std::move(labels), table.provenance());
    return out.with_record(record("binarize", json::object()));
}

DatasetTable subsample_benign(const DatasetTable& table, std::size_t target, std::uint64_t seed) {
    std::vector<std::size_t> benign, keep;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        (is_benign(table.labels()[i]) ? benign : keep).push_back(i);
    }
    if (target > benign.size()) {
        throw Error(ErrorCode::target_exceeds_population, "benign target " + std::to_string(target) + " exceeds " +
                                                              std::to_string(benign.size()) + " benign rows");
    }
    Rng rng(seed);
    for (std::size_t k : rng.sample_without_replacement(benign.size(), target)) keep.push_back(benign[k]);
    std::sort(keep.begin(), keep.end());
    return table.take_rows(keep).with_record(record("subsample_benign", {{"target", target}, {"seed", seed}}));
}

DatasetTable single_attack_subset(const DatasetTable& table, std::string_view attack, std::size_t ratio,
                                  std::uint64_t seed) {
    const std::string wanted = canonical_attack_name(attack);
    std::vector<std::size_t> benign, keep;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        const auto& l = table.labels()[i];
        if (is_benign(l)) {
            benign.push_back(i);
        } else if (canonical_attack_name(l) == wanted) {
            keep.push_back(i);
        }
    }
    if (keep.empty()) throw Error(ErrorCode::unknown_attack, "attack '" + std::string(attack) + "' not in table");
    const std::size_t n_benign = std::min(ratio * keep.size(), benign.size());
    Rng rng(seed);
    for (std::size_t k : rng.sample_without_replacement(benign.size(), n_benign)) keep.push_back(benign[k]);
    std::sort(keep.begin(), keep.end());
    return table.take_rows(keep).with_record(
        record("single_attack", {{"attack", std::string(attack)}, {"ratio", ratio}, {"seed", seed}}));
}

namespace {

std::vector<std::size_t> train_indices(std::size_t n, double fraction, std::uint64_t seed) {
    std::size_t n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    Rng rng(seed);
    return rng.sample_without_replacement(n, n_train);
}

DatasetTable split_side(const DatasetTable& table, double fraction, std::uint64_t seed, bool train_side) {
    const auto train = train_indices(table.rows(), fraction, seed);
    std::vector<std::size_t> pick;
    if (train_side) {
        pick = train;
    } else {
        std::vector<bool> in_train(table.rows(), false);
        for (auto i : train) in_train[i] = true;
        for (std::size_t i = 0; i < table.rows(); ++i) {
            if (!in_train[i]) pick.push_back(i);
        }
    }
    return table.take_rows(pick).with_record(
        record("split", {{"fraction", fraction}, {"seed", seed}, {"side", train_side ? "train" : "test"}}));
}

}  // namespace

std::pair<DatasetTable, DatasetTable> split_train_test(const DatasetTable& table, double fraction,
                                                       std::uint64_t seed) {
    if (table.rows() < 2) throw Error(ErrorCode::invalid_argument, "split needs at least 2 rows");
    return {split_side(table, fraction, seed, true), split_side(table, fraction, seed, false)};
}

DatasetTable drop_columns(const DatasetTable& table, std::span<const std::string> names) {
    std::set<std::string> drop(names.begin(), names.end());
    std::vector<std::string> keep;
    for (const auto& n : table.feature_names()) {
        if (!drop.count(n)) keep.push_back(n);
    }
    DatasetTable out = select_columns(table, keep);
    // select_columns logged a select; record the drop instead.
    Provenance p = out.provenance();
    p.transforms.pop_back();
    p.transforms.push_back(record("drop_columns", {{"columns", std::vector<std::string>(names.begin(), names.end())}}));
    return DatasetTable(out.feature_names(), out.values(), out.labels(), std::move(p));
}

DatasetTable select_columns(const DatasetTable& table, std::span<const std::string> names) {
    std::vector<std::size_t> idx;
    for (const auto& n : names) {
        auto j = table.column_index(n);
        if (!j) throw Error(ErrorCode::schema_mismatch, "no column '" + n + "'");
        idx.push_back(*j);
    }
    std::vector<double> vals;
    vals.reserve(table.rows() * idx.size());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (auto j : idx) vals.push_back(table.at(i, j));
    }
    DatasetTable out(std::vector<std::string>(names.begin(), names.end()), std::move(vals), table.labels(),
                     table.provenance());
    return out.with_record(record("select_columns", {{"columns", std::vector<std::string>(names.begin(), names.end())}}));
}

DatasetTable replay(const DatasetTable& raw, std::span<const TransformRecord> log) {
    DatasetTable t = raw;
    for (const auto& rec : log) {
        const json p = json::parse(rec.params_json);
        if (rec.op == "minmax") {
            MinMaxParams mm{p.at("features").get<std::vector<std::string>>(), p.at("min").get<std::vector<double>>(),
                            p.at("max").get<std::vector<double>>()};
            t = minmax_apply(t, mm);
        } else if (rec.op == "onehot") {
            OneHotParams oh{p.at("column").get<std::string>(), p.at("codes").get<std::vector<std::int64_t>>(),
                            p.at("other").get<bool>()};
            t = onehot_apply(t, oh);
        } else if (rec.op == "binarize") {
            t = binarize_labels(t);
        } else if (rec.op == "subsample_benign") {
            t = subsample_benign(t, p.at("target").get<std::size_t>(), p.at("seed").get<std::uint64_t>());
        } else if (rec.op == "single_attack") {
            t = single_attack_subset(t, p.at("attack").get<std::string>(), p.at("ratio").get<std::size_t>(),
                                     p.at("seed").get<std::uint64_t>());
        } else if (rec.op == "split") {
            t = split_side(t, p.at("fraction").get<double>(), p.at("seed").get<std::uint64_t>(),
                           p.at("side").get<std::string>() == "train");
        } else if (rec.op == "drop_columns") {
            const auto cols = p.at("columns").get<std::vector<std::string>>();
            t = drop_columns(t, cols);
        } else if (rec.op == "select_columns") {
            const auto cols = p.at("columns").get<std::vector<std::string>>();
            t = select_columns(t, cols);
        } else {
            throw Error(ErrorCode::parse_error, "unknown transform '" + rec.op + "' in provenance log");
        }
    }
    return t;
}

std::string canonical_attack_name(std::string_view label) {
    std::string key;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    static const std::map<std::string, std::string> aliases = {
        {"ddos", "ddosloichttp"},
        {"ddosattacksloichttp", "ddosloichttp"},
        {"ddosattackhoic", "ddoshoic"},
        {"ddosattackloicudp", "ddosloicudp"},
        {"dosattackshulk", "doshulk"},
        {"dosattacksslowhttptest", "dosslowhttptest"},
        {"dosattacksgoldeneye", "dosgoldeneye"},
        {"dosattacksslowloris", "dosslowloris"},
        {"ftpbruteforce", "ftppatator"},
        {"sshbruteforce", "sshpatator"},
        {"infilteration", "infiltration"},
        {"bruteforceweb", "webattackbruteforce"},
        {"bruteforcexss", "webattackxss"},
        {"sqlinjection", "webattacksqlinjection"},
    };
    if (auto it = aliases.find(key); it != aliases.end()) return it->second;
    return key;
}

}  // namespace nidsgen
