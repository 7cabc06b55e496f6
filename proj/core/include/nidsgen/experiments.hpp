#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nidsgen/learners.hpp"
#include "nidsgen/metrics.hpp"
#include "nidsgen/mrmr.hpp"

namespace nidsgen {

enum class TaskKind { grouped_binary, single_attack };
enum class FeatureMode { full, mrmr, best_two };

std::string_view to_string(TaskKind t) noexcept;
std::string_view to_string(FeatureMode m) noexcept;

/// Attacks evaluated one at a time against benign traffic.
inline constexpr std::string_view kSingleAttacks[] = {
    "DoS GoldenEye",  "DoS Slowloris",          "DoS Hulk",        "DoS Slowhttptest",
    "DDoS LOIC-HTTP", "SSH-Patator",            "FTP-Patator",     "Bot",
    "Infiltration",   "Web Attack Brute Force", "Web Attack - XSS", "Web Attack - Sql Injection",
};
/// Only evaluated when both sources are CIC-format.
inline constexpr std::string_view kCicOnlyAttack = "Infiltration";

struct DatasetSource {
    std::string name;
    std::filesystem::path path;
    /// "native" (this tool's extraction schema) or "cic" (CICFlowMeter CSV).
    /// Empty means detect from the file's schema comment.
    std::string format;
};

struct ExperimentConfig {
    std::vector<DatasetSource> datasets;
    /// (train, test) pairs; empty means every same-format ordered pair.
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<TaskKind> tasks{TaskKind::grouped_binary};
    /// Single-attack targets; empty means the whole single-attack list.
    std::vector<std::string> attacks;
    std::vector<Family> families{std::begin(kAllFamilies), std::end(kAllFamilies)};
    std::vector<std::uint64_t> seeds;
    std::vector<FeatureMode> feature_modes{FeatureMode::full};
    std::vector<std::size_t> mrmr_k{std::begin(kSweepCounts), std::end(kSweepCounts)};
    /// "table2" searches the full hyperparameter grids, "default" fits defaults.
    std::string grid = "table2";
    double split = 0.8;
    std::size_t benign_ratio = 10;
    std::size_t repetitions = 3;
    double rare_threshold = 0.001;
    std::size_t mi_bins = 16;
    /// Benign rows kept per dataset before anything else; unset keeps all.
    std::optional<std::size_t> benign_subsample;
    std::filesystem::path output;
    std::size_t jobs = 1;
};

/// Documented keys, in reference order: (key, description).
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Parses "key = value" lines; '#' starts a comment. Relative dataset paths
/// resolve against `base_dir`. Throws InvalidArgument with the line number.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Sets one key as the config file would. Throws InvalidArgument.
void apply_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                        const std::filesystem::path& base_dir = {});
/// Canonical text of the settings that affect results (no output dir or jobs).
std::string config_snapshot(const ExperimentConfig& cfg);

struct CellSpec {
    std::string id;
    std::string train;
    std::string test;
    Family family = Family::lda;
    TaskKind task = TaskKind::grouped_binary;
    std::string attack;  // single-attack only
    FeatureMode mode = FeatureMode::full;
    std::size_t k = 0;  // feature count for mrmr / best_two
    std::uint64_t seed = 0;
    std::size_t repetitions = 1;

    bool cross() const noexcept { return train != test; }
};

/// Every cell implied by the config, in deterministic order. Throws
/// SchemaIncompatible for a pair mixing dataset formats, AttackAbsent for an
/// attack outside the single-attack list.
std::vector<CellSpec> enumerate_cells(const ExperimentConfig& cfg);

struct RepetitionResult {
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    ParamMap params;
    double validation_mcc = 0;
    std::vector<std::string> features;
    /// Label counts of each source's table after subsetting, before the split.
    std::map<std::string, std::map<std::string, std::size_t>> source_counts;
    std::map<std::string, std::size_t> train_counts;
    std::map<std::string, std::size_t> test_counts;
    MetricsReport metrics;
};

struct CellResult {
    CellSpec spec;
    std::string config_hash;
    bool ok = true;
    std::string error;
    std::vector<RepetitionResult> repetitions;
    /// Index of the repetition reported (highest MCC, first on ties).
    std::size_t aggregate = 0;
    std::string schema_hash;
    std::string train_provenance;  // JSON
    std::string test_provenance;   // JSON
    std::string warning;
    double wall_seconds = 0;  // not part of the record

    const MetricsReport* reported() const {
        return ok && aggregate < repetitions.size() ? &repetitions[aggregate].metrics : nullptr;
    }
};

/// Index of the highest-MCC repetition, first on ties.
std::size_t max_mcc_repetition(const std::vector<RepetitionResult>& reps);

std::string result_to_json(const CellResult& r);
CellResult result_from_json(std::string_view line);

struct RunOutcome {
    std::vector<CellResult> results;  // cell order
    std::size_t executed = 0;         // cells trained by this run
    std::size_t resumed = 0;          // cells taken from an earlier run
};

/// Runs every cell, appending each finished record to <output>/results.jsonl,
/// then rewrites it in cell order and writes summary.csv and timings.jsonl.
/// Cells already recorded under the same config hash are not rerun.
RunOutcome run_experiments(const ExperimentConfig& cfg);

/// Grouped-binary within/cross matrix.
RunOutcome run_matrix(ExperimentConfig cfg);
/// One attack against undersampled benign traffic, repeated.
RunOutcome run_single_attack(ExperimentConfig cfg);
/// Grouped-binary cells for each mRMR feature count.
RunOutcome run_feature_sweep(ExperimentConfig cfg);

/// Train set, Test set, Classifier[, Attack][, Features], MCC, F1, AUROC in percent.
void write_summary_csv(const std::vector<CellResult>& results, std::ostream& out);

}  // namespace nidsgen
