#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nidsgen {

inline constexpr std::string_view kBenignLabel = "Benign";
inline constexpr std::string_view kMaliciousLabel = "Malicious";

/// Case-insensitive "benign" (CIC files spell it BENIGN).
bool is_benign(std::string_view label);

/// One step of a table's transform history. params is a JSON object.
struct TransformRecord {
    std::string op;
    std::string params_json;
};

struct Provenance {
    std::string source;
    std::vector<TransformRecord> transforms;
};

/// Dense labeled feature matrix, row-major. Immutable: every transform
/// returns a new table with one more provenance record.
class DatasetTable {
public:
    DatasetTable() = default;
    DatasetTable(std::vector<std::string> feature_names, std::vector<double> values, std::vector<std::string> labels,
                 Provenance provenance = {});

    std::size_t rows() const noexcept { return labels_.size(); }
    std::size_t cols() const noexcept { return names_.size(); }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const Provenance& provenance() const noexcept { return provenance_; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
    std::vector<double> column(std::size_t j) const;
    std::optional<std::size_t> column_index(std::string_view name) const;
    /// 1 for every non-benign label.
    std::vector<std::uint8_t> binary_targets() const;
    /// Label -> count, ordered by label.
    std::map<std::string, std::size_t> class_counts() const;

    /// Row subset in the given order; no provenance record.
    DatasetTable take_rows(std::span<const std::size_t> indices) const;
    DatasetTable with_record(TransformRecord record) const;

private:
    std::vector<std::string> names_;
    std::vector<double> values_;
    std::vector<std::string> labels_;
    Provenance provenance_;
};

// ---- CSV ------------------------------------------------------------------

struct CsvLoadOptions {
    /// Matched case-insensitively after trimming. Required: a header without
    /// it is a HeaderMismatch.
    std::string label_column = "label";
    /// Columns dropped at load time (trimmed, exact match). Identifier
    /// columns of the extraction schema are always dropped.
    std::vector<std::string> exclude_columns;
    /// When set, the header (minus label) must equal this list.
    std::optional<std::vector<std::string>> expected_columns;
    /// Renames CIC-IDS2018 header spellings to their CIC-IDS2017 equivalents.
    bool cic_canonical_names = false;
};

struct LoadReport {
    /// Non-finite or empty numeric cells mapped to 0, per column.
    std::vector<std::pair<std::string, std::size_t>> nonfinite_by_column;
    std::size_t nonfinite_total = 0;
    std::vector<std::string> dropped_columns;
};

/// Columns the grouped experiments drop from CIC-format CSVs: flow
/// identifiers, the timestamp, and the duplicated forward header length.
std::vector<std::string> cic_excluded_columns();
/// CIC-IDS2017 spelling of a CIC column name; unknown names pass through.
std::string cic_canonical_column(std::string_view name);

DatasetTable load_csv(const std::filesystem::path& path, const CsvLoadOptions& options = {},
                      LoadReport* report = nullptr);
DatasetTable read_csv(std::istream& in, const std::string& source, const CsvLoadOptions& options = {},
                      LoadReport* report = nullptr);
/// Writes header + rows (17 significant digits) and the provenance log to
/// "<path>.provenance.jsonl".
void save_csv(const DatasetTable& table, const std::filesystem::path& path);
void write_csv(const DatasetTable& table, std::ostream& out);

std::string serialize_provenance(const Provenance& p);
Provenance parse_provenance(std::istream& in);

// ---- transforms -----------------------------------------------------------

struct MinMaxParams {
    std::vector<std::string> features;
    std::vector<double> min;
    std::vector<double> max;
};

MinMaxParams minmax_fit(const DatasetTable& train);
/// x' = (x - min) / (max - min); constant features map to 0. No clamping.
DatasetTable minmax_apply(const DatasetTable& table, const MinMaxParams& params);

struct OneHotParams {
    std::string column = "ip_prot";
    /// Frequent categories in output order (descending frequency, then code).
    std::vector<std::int64_t> codes;
    bool has_other = false;
};

OneHotParams onehot_fit(const DatasetTable& table, std::string_view column = "ip_prot", double rare_threshold = 0.001);
/// Replaces the categorical column in place by ip_prot_<code> indicators
/// (plus ip_prot_other). Unseen codes go to ip_prot_other when it exists.
DatasetTable onehot_apply(const DatasetTable& table, const OneHotParams& params);
DatasetTable onehot_protocol(const DatasetTable& table, double rare_threshold = 0.001);

/// Benign / Malicious.
DatasetTable binarize_labels(const DatasetTable& table);

/// Keeps every attack row and a seeded uniform sample of `target` benign rows.
/// Throws TargetExceedsPopulation.
DatasetTable subsample_benign(const DatasetTable& table, std::size_t target, std::uint64_t seed);

/// All rows of `attack` plus min(ratio * n_attack, n_benign) benign rows;
/// other attacks are dropped. Throws UnknownAttack.
DatasetTable single_attack_subset(const DatasetTable& table, std::string_view attack, std::size_t ratio,
                                  std::uint64_t seed);

/// Random (unstratified) split. Train size round(fraction * n), kept within
/// [1, n-1]. Both sides keep the original row order.
std::pair<DatasetTable, DatasetTable> split_train_test(const DatasetTable& table, double fraction,
                                                       std::uint64_t seed);

DatasetTable drop_columns(const DatasetTable& table, std::span<const std::string> names);
/// Keeps the named columns, in the given order.
DatasetTable select_columns(const DatasetTable& table, std::span<const std::string> names);

/// Re-applies a transform log to the table it started from.
DatasetTable replay(const DatasetTable& raw, std::span<const TransformRecord> log);

/// Attack names compared after dropping case and non-alphanumerics, with
/// CIC-IDS2018 spellings folded onto their CIC-IDS2017 equivalents.
std::string canonical_attack_name(std::string_view label);

}  // namespace nidsgen
