#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nidsgen/dataset.hpp"

namespace nidsgen {

inline constexpr std::size_t kDefaultMiBins = 16;

/// Quantile discretization. Columns with at most `bins` distinct values keep
/// one code per distinct value; otherwise codes index `bins` quantile bins.
/// Codes are dense, starting at 0, and order-preserving.
std::vector<std::uint32_t> discretize(std::span<const double> x, std::size_t bins = kDefaultMiBins);

/// Plug-in mutual information in bits between two code vectors.
double mutual_information_codes(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// MI (bits) between a discretized column and class labels.
double mutual_information(std::span<const double> x, std::span<const std::uint32_t> labels,
                          std::size_t bins = kDefaultMiBins);

/// Dense label codes in order of first appearance.
std::vector<std::uint32_t> encode_labels(std::span<const std::string> labels);

enum class MrmrVariant {
    mid,  // relevance - mean redundancy
    miq,  // relevance / mean redundancy
};

struct MrmrConfig {
    std::size_t bins = kDefaultMiBins;
    MrmrVariant variant = MrmrVariant::mid;
    std::size_t jobs = 1;
};

/// Greedy selection trace. The first n entries are the n-feature selection.
struct FeatureRanking {
    std::vector<std::string> names;
    std::vector<std::size_t> indices;
    std::vector<double> relevance;   // MI(feature; label)
    std::vector<double> redundancy;  // mean MI to previously selected, 0 for the first
    std::vector<double> score;
    std::size_t bins = kDefaultMiBins;
    MrmrVariant variant = MrmrVariant::mid;
};

/// Ranks k features of the table against its labels. Ties go to the lower
/// column index. Throws KOutOfRange unless 1 <= k <= cols.
FeatureRanking mrmr_rank(const DatasetTable& table, std::size_t k, const MrmrConfig& cfg = {});

/// Scores closer than this (relative, floor 1) are ties; the lower column index wins.
inline constexpr double kScoreTieTolerance = 1e-12;

/// Same greedy loop over already-discretized columns.
FeatureRanking mrmr_rank_codes(const std::vector<std::vector<std::uint32_t>>& features,
                               std::span<const std::uint32_t> labels, std::span<const std::string> names, std::size_t k,
                               MrmrVariant variant = MrmrVariant::mid, std::size_t jobs = 1);

inline constexpr std::size_t kSweepCounts[] = {1, 2, 3, 4, 5, 10, 20};

/// Nested prefixes of the ranking. Throws KOutOfRange if a count exceeds it.
std::vector<std::vector<std::string>> sweep_counts(const FeatureRanking& ranking,
                                                   std::span<const std::size_t> counts = kSweepCounts);

/// rank,feature,column,relevance,redundancy,score
void write_ranking_csv(const FeatureRanking& ranking, std::ostream& out);
FeatureRanking read_ranking_csv(std::istream& in);

}  // namespace nidsgen
