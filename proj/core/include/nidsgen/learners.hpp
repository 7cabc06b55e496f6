#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nidsgen/dataset.hpp"

namespace nidsgen {

enum class Family { lda, dt, rf, xgb };

std::string_view family_name(Family f) noexcept;
/// Accepts lda, dt, rf, xgb (case-insensitive). Throws InvalidArgument.
Family parse_family(std::string_view name);
inline constexpr Family kAllFamilies[] = {Family::lda, Family::dt, Family::rf, Family::xgb};

/// Hyperparameters as text, keyed by name. "None" means unset.
using ParamMap = std::map<std::string, std::string>;

struct GridAxis {
    std::string name;
    std::vector<std::string> values;
};
using ParamGrid = std::vector<GridAxis>;

/// Default hyperparameters of a family.
ParamMap default_params(Family f);
/// Hyperparameter search space used by the experiments.
ParamGrid search_grid(Family f);
std::size_t grid_size(const ParamGrid& grid);
/// Cell `index` in mixed-radix order, last axis varying fastest.
ParamMap grid_cell(const ParamGrid& grid, std::size_t index);

// ---- fitted models ---------------------------------------------------------

struct ConstantModel {
    double score = 0;
};

/// Two-class linear discriminant.
struct LdaModel {
    std::vector<double> mean0, mean1;
    /// Pooled within-class covariance after shrinkage, row-major d x d.
    std::vector<double> covariance;
    double prior0 = 0.5, prior1 = 0.5;
    double shrinkage = 0;
    std::string solver = "svd";
    /// Decision function w.x + b; score = sigmoid of it.
    std::vector<double> weights;
    double bias = 0;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 for leaves
    double threshold = 0;       // x <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    /// Leaf output: P(malicious) for classification trees, weight for boosting.
    double value = 0;
    double n0 = 0, n1 = 0;  // training class counts reaching the node
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    std::size_t leaf_count() const;
    std::size_t depth() const;
};

struct ForestModel {
    std::vector<TreeModel> trees;
    /// Seed of each tree's bootstrap draw and feature sampling.
    std::vector<std::uint64_t> tree_seeds;
    bool bootstrap = true;
};

struct BoostedModel {
    enum class Booster { tree, linear };
    Booster booster = Booster::tree;
    double learning_rate = 0.3;
    double base_score = 0.5;
    std::vector<TreeModel> trees;
    /// gblinear stage deltas before scaling by the learning rate.
    std::vector<double> bias_steps;
    std::vector<std::vector<double>> weight_steps;

    std::size_t stages() const noexcept {
        return booster == Booster::tree ? trees.size() : bias_steps.size();
    }
    /// Raw margin after the first `stages` stages.
    double margin(std::span<const double> x, std::size_t stages) const;
    double margin(std::span<const double> x) const { return margin(x, this->stages()); }
};

using ModelBody = std::variant<ConstantModel, LdaModel, TreeModel, ForestModel, BoostedModel>;

class Model {
public:
    Model() = default;
    Model(Family family, ParamMap params, std::uint64_t seed, std::vector<std::string> features, ModelBody body,
          std::string warning = {});

    Family family() const noexcept { return family_; }
    const ParamMap& params() const noexcept { return params_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::string>& feature_names() const noexcept { return features_; }
    const ModelBody& body() const noexcept { return body_; }
    /// Non-empty when training degenerated to a constant model.
    const std::string& warning() const noexcept { return warning_; }

    /// P(malicious) for one row in the model's feature order. Total: any
    /// real input yields a finite score in [0, 1].
    double score(std::span<const double> x) const;

    std::string to_json() const;
    static Model from_json(std::string_view text);

private:
    Family family_ = Family::lda;
    ParamMap params_;
    std::uint64_t seed_ = 0;
    std::vector<std::string> features_;
    ModelBody body_;
    std::string warning_;
};

inline constexpr std::string_view kModelFormat = "nidsgen-model-v1";

struct ScoredPrediction {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    double threshold = 0.5;
};

/// Fits a family on binary targets (benign = 0). A single-class training set
/// yields a constant model with a warning. Throws InvalidArgument on unknown
/// or malformed parameters.
Model fit(Family family, const ParamMap& params, const DatasetTable& train, std::uint64_t seed,
          std::size_t jobs = 1);

/// Columns are matched to the model's features by name. Throws SchemaMismatch
/// when one is missing.
ScoredPrediction predict(const Model& model, const DatasetTable& table, double threshold = 0.5);

/// Mean logistic loss of a boosted model after each stage 0..stages.
std::vector<double> staged_log_loss(const BoostedModel& model, const DatasetTable& table);

struct GridSearchConfig {
    double subset_fraction = 0.2;
    double fit_fraction = 0.75;
    std::size_t jobs = 1;
};

struct GridSearchResult {
    ParamMap best;
    std::size_t best_index = 0;
    double best_score = 0;
    std::vector<double> cell_scores;  // validation MCC per cell
    Model model;                      // best cell refit on the full table
};

/// Exhaustive search on a seeded subset with an internal fit/validate split
/// scored by MCC. Ties go to the earliest cell.
GridSearchResult grid_search(Family family, const ParamGrid& grid, const DatasetTable& train, std::uint64_t seed,
                             const GridSearchConfig& cfg = {});

}  // namespace nidsgen
