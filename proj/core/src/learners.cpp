#include "nidsgen/learners.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numeric>
#include <queue>

#include "json.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/metrics.hpp"
#include "nidsgen/parallel.hpp"
#include "nidsgen/rng.hpp"

namespace nidsgen {

using nlohmann::json;

std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::lda: return "lda";
        case Family::dt: return "dt";
        case Family::rf: return "rf";
        case Family::xgb: return "xgb";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "lda") return Family::lda;
    if (s == "dt") return Family::dt;
    if (s == "rf") return Family::rf;
    if (s == "xgb") return Family::xgb;
    throw Error(ErrorCode::invalid_argument, "unknown model family '" + std::string(name) + "'");
}

ParamMap default_params(Family f) {
    switch (f) {
        case Family::lda: return {{"solver", "svd"}, {"shrinkage", "None"}};
        case Family::dt:
            return {{"criterion", "gini"},       {"splitter", "best"},       {"max_depth", "None"},
                    {"min_samples_split", "2"},  {"min_samples_leaf", "1"},  {"max_features", "None"},
                    {"max_leaf_nodes", "None"}};
        case Family::rf:
            return {{"criterion", "gini"},      {"max_depth", "None"},        {"min_samples_split", "2"},
                    {"min_samples_leaf", "1"},  {"max_features", "sqrt"},     {"max_leaf_nodes", "None"},
                    {"n_estimators", "100"},    {"bootstrap", "true"}};
        case Family::xgb:
            return {{"booster", "gbtree"},      {"max_depth", "6"}, {"n_estimators", "100"},
                    {"learning_rate", "0.3"},   {"min_child_weight", "1"}, {"gamma", "0"},
                    {"reg_lambda", "1"}};
    }
    return {};
}

ParamGrid search_grid(Family f) {
    switch (f) {
        case Family::lda:
            return {{"solver", {"svd", "lsqr", "eigen"}}, {"shrinkage", {"None", "auto", "0.1", "0.5", "0.9"}}};
        case Family::dt:
            return {{"criterion", {"gini", "entropy"}},
                    {"splitter", {"best", "random"}},
                    {"max_depth", {"None", "20"}},
                    {"min_samples_split", {"2", "4", "8", "16"}},
                    {"min_samples_leaf", {"1", "2", "4"}},
                    {"max_features", {"None", "sqrt", "log2"}},
                    {"max_leaf_nodes", {"None", "10000", "1000000"}}};
        case Family::rf:
            return {{"criterion", {"gini", "entropy"}},
                    {"max_depth", {"None", "10"}},
                    {"min_samples_split", {"4", "16"}},
                    {"max_features", {"None", "sqrt", "log2"}},
                    {"n_estimators", {"10", "50"}}};
        case Family::xgb:
            return {{"max_depth", {"3", "6", "12"}},
                    {"n_estimators", {"10", "50"}},
                    {"learning_rate", {"0.1", "0.3", "1"}},
                    {"booster", {"gbtree", "gblinear"}},
                    {"min_child_weight", {"0.5", "1", "2"}},
                    {"gamma", {"0", "1", "10"}}};
    }
    return {};
}

std::size_t grid_size(const ParamGrid& grid) {
    std::size_t n = 1;
    for (const auto& axis : grid) n *= axis.values.size();
    return n;
}

ParamMap grid_cell(const ParamGrid& grid, std::size_t index) {
    ParamMap out;
    for (std::size_t a = grid.size(); a-- > 0;) {
        const auto& axis = grid[a];
        if (axis.values.empty()) throw Error(ErrorCode::invalid_argument, "empty grid axis " + axis.name);
        out[axis.name] = axis.values[index % axis.values.size()];
        index /= axis.values.size();
    }
    return out;
}

namespace {

constexpr double kLambdaDefault = 1.0;

double sigmoid(double m) {
    if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
    const double e = std::exp(m);
    return e / (1.0 + e);
}

// ---- parameter parsing -----------------------------------------------------

class Params {
public:
    Params(Family f, const ParamMap& given) : map_(default_params(f)) {
        for (const auto& [k, v] : given) {
            if (!map_.contains(k)) {
                throw Error(ErrorCode::invalid_argument,
                            "unknown parameter '" + k + "' for " + std::string(family_name(f)));
            }
            map_[k] = v;
        }
    }
    const ParamMap& map() const { return map_; }
    const std::string& text(const std::string& k) const { return map_.at(k); }
    bool none(const std::string& k) const { return text(k) == "None" || text(k) == "none"; }
    double real(const std::string& k) const {
        const auto& s = text(k);
        double v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) bad(k);
        return v;
    }
    std::size_t count(const std::string& k) const {
        const auto& s = text(k);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) bad(k);
        return v;
    }
    std::optional<std::size_t> opt_count(const std::string& k) const {
        if (none(k)) return std::nullopt;
        return count(k);
    }
    bool flag(const std::string& k) const {
        const auto& s = text(k);
        if (s == "true" || s == "True" || s == "1") return true;
        if (s == "false" || s == "False" || s == "0") return false;
        bad(k);
    }
    std::string choice(const std::string& k, std::initializer_list<std::string_view> allowed) const {
        for (auto a : allowed) {
            if (text(k) == a) return text(k);
        }
        bad(k);
    }
    [[noreturn]] void bad(const std::string& k) const {
        throw Error(ErrorCode::invalid_argument, "invalid value '" + text(k) + "' for parameter " + k);
    }

private:
    ParamMap map_;
};

enum class MaxFeatures { all, sqrt, log2, count };

struct TreeParams {
    bool entropy = false;
    bool random_splitter = false;
    std::optional<std::size_t> max_depth;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    MaxFeatures max_features = MaxFeatures::all;
    std::size_t max_features_count = 0;
    std::optional<std::size_t> max_leaf_nodes;

    std::size_t features_per_split(std::size_t d) const {
        std::size_t k = d;
        switch (max_features) {
            case MaxFeatures::all: k = d; break;
            case MaxFeatures::sqrt: k = static_cast<std::size_t>(std::sqrt(static_cast<double>(d))); break;
            case MaxFeatures::log2: k = static_cast<std::size_t>(std::log2(static_cast<double>(d))); break;
            case MaxFeatures::count: k = max_features_count; break;
        }
        return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(d, 1));
    }
};

TreeParams tree_params(const Params& p, bool has_splitter) {
    TreeParams t;
    t.entropy = p.choice("criterion", {"gini", "entropy"}) == "entropy";
    if (has_splitter) t.random_splitter = p.choice("splitter", {"best", "random"}) == "random";
    t.max_depth = p.opt_count("max_depth");
    t.min_samples_split = p.count("min_samples_split");
    t.min_samples_leaf = p.count("min_samples_leaf");
    if (t.min_samples_split < 2) p.bad("min_samples_split");
    if (t.min_samples_leaf < 1) p.bad("min_samples_leaf");
    const auto& mf = p.text("max_features");
    if (p.none("max_features")) t.max_features = MaxFeatures::all;
    else if (mf == "sqrt") t.max_features = MaxFeatures::sqrt;
    else if (mf == "log2") t.max_features = MaxFeatures::log2;
    else {
        t.max_features = MaxFeatures::count;
        t.max_features_count = p.count("max_features");
        if (t.max_features_count == 0) p.bad("max_features");
    }
    t.max_leaf_nodes = p.opt_count("max_leaf_nodes");
    if (t.max_leaf_nodes && *t.max_leaf_nodes < 2) p.bad("max_leaf_nodes");
    return t;
}

// ---- training data -----------------------------------------------------------

/// Column-major copy of a table for split scans.
struct Columns {
    std::size_t n = 0, d = 0;
    std::vector<double> v;
    double at(std::size_t i, std::size_t j) const { return v[j * n + i]; }

    explicit Columns(const DatasetTable& t) : n(t.rows()), d(t.cols()), v(n * d) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) v[j * n + i] = t.at(i, j);
        }
    }
};

// ---- CART --------------------------------------------------------------------

double impurity(double n0, double n1, bool entropy) {
    const double n = n0 + n1;
    if (n <= 0) return 0;
    const double p0 = n0 / n, p1 = n1 / n;
    if (!entropy) return 1.0 - p0 * p0 - p1 * p1;
    double h = 0;
    if (p0 > 0) h -= p0 * std::log2(p0);
    if (p1 > 0) h -= p1 * std::log2(p1);
    return h;
}

double midpoint(double a, double b) {
    const double m = a + (b - a) / 2.0;
    return m >= b ? a : m;
}

/// Grows one classification tree best-first over `rows` (duplicates allowed,
/// as produced by bootstrapping). Each pending node keeps its samples sorted
/// per feature; splits stable-partition those lists.
class CartBuilder {
public:
    CartBuilder(const Columns& x, std::span<const std::uint8_t> y, std::vector<std::uint32_t> rows,
                const TreeParams& p, std::uint64_t seed)
        : x_(x), y_(y), rows_(std::move(rows)), p_(p), rng_(seed), mf_(p.features_per_split(x.d)) {}

    TreeModel build() {
        const std::size_t m = rows_.size();
        auto root = std::make_unique<Pending>();
        root->sorted.resize(x_.d);
        for (std::size_t f = 0; f < x_.d; ++f) {
            auto& s = root->sorted[f];
            s.resize(m);
            std::iota(s.begin(), s.end(), 0u);
            std::stable_sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) { return val(a, f) < val(b, f); });
        }
        double n1 = 0;
        for (std::size_t s = 0; s < m; ++s) n1 += y_[rows_[s]];
        root->node = add_node(static_cast<double>(m) - n1, n1);
        root->slots.resize(m);
        std::iota(root->slots.begin(), root->slots.end(), 0u);
        total_ = static_cast<double>(m);

        auto cmp = [](const std::unique_ptr<Pending>& a, const std::unique_ptr<Pending>& b) {
            if (a->improvement != b->improvement) return a->improvement < b->improvement;
            return a->node > b->node;
        };
        std::priority_queue<std::unique_ptr<Pending>, std::vector<std::unique_ptr<Pending>>, decltype(cmp)> queue(cmp);
        if (evaluate(*root)) queue.push(std::move(root));

        std::size_t leaves = 1;
        goes_left_.assign(m, 0);
        while (!queue.empty() && (!p_.max_leaf_nodes || leaves < *p_.max_leaf_nodes)) {
            auto work = std::move(const_cast<std::unique_ptr<Pending>&>(queue.top()));
            queue.pop();
            auto [left, right] = split(*work);
            ++leaves;
            if (evaluate(*left)) queue.push(std::move(left));
            if (evaluate(*right)) queue.push(std::move(right));
        }
        return std::move(tree_);
    }

private:
    struct Pending {
        std::int32_t node = 0;
        std::size_t depth = 0;
        std::vector<std::uint32_t> slots;
        std::vector<std::vector<std::uint32_t>> sorted;
        std::size_t feature = 0;
        double threshold = 0;
        double improvement = 0;
    };

    double val(std::uint32_t slot, std::size_t f) const { return x_.at(rows_[slot], f); }

    std::int32_t add_node(double n0, double n1) {
        TreeNode node;
        node.n0 = n0;
        node.n1 = n1;
        node.value = n1 / (n0 + n1);
        tree_.nodes.push_back(node);
        return static_cast<std::int32_t>(tree_.nodes.size() - 1);
    }

    /// Finds the node's split; false when it must stay a leaf.
    bool evaluate(Pending& w) {
        const auto& node = tree_.nodes[static_cast<std::size_t>(w.node)];
        const double n = node.n0 + node.n1;
        const std::size_t m = w.slots.size();
        if (node.n0 == 0 || node.n1 == 0) return false;
        if (p_.max_depth && w.depth >= *p_.max_depth) return false;
        if (m < p_.min_samples_split || m < 2 * p_.min_samples_leaf) return false;

        std::vector<std::size_t> order(x_.d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::size_t batch = x_.d;
        if (mf_ < x_.d) {
            rng_.shuffle(std::span<std::size_t>(order));
            std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(mf_));
            batch = mf_;
        }
        const double parent = impurity(node.n0, node.n1, p_.entropy);
        bool found = false;
        double best = 0;
        // Falls back to further features, one at a time, until a valid split appears.
        for (std::size_t k = 0; k < x_.d; ++k) {
            if (k >= batch && found) break;
            const std::size_t f = order[k];
            const auto& s = w.sorted[f];
            const double lo = val(s.front(), f), hi = val(s.back(), f);
            if (!(lo < hi)) continue;
            auto consider = [&](double l0, double l1, std::size_t nl, double t) {
                if (nl < p_.min_samples_leaf || m - nl < p_.min_samples_leaf) return;
                const double r0 = node.n0 - l0, r1 = node.n1 - l1;
                const double gain = parent - ((l0 + l1) / n) * impurity(l0, l1, p_.entropy) -
                                    ((r0 + r1) / n) * impurity(r0, r1, p_.entropy);
                if (!found || gain > best) {
                    found = true;
                    best = gain;
                    w.feature = f;
                    w.threshold = t;
                }
            };
            if (p_.random_splitter) {
                const double t = rng_.uniform(lo, hi);
                double l0 = 0, l1 = 0;
                std::size_t nl = 0;
                for (auto slot : s) {
                    if (!(val(slot, f) <= t)) break;
                    (y_[rows_[slot]] ? l1 : l0) += 1;
                    ++nl;
                }
                consider(l0, l1, nl, t);
            } else {
                double l0 = 0, l1 = 0;
                for (std::size_t i = 0; i + 1 < m; ++i) {
                    (y_[rows_[s[i]]] ? l1 : l0) += 1;
                    const double a = val(s[i], f), b = val(s[i + 1], f);
                    if (a < b) consider(l0, l1, i + 1, midpoint(a, b));
                }
            }
        }
        if (!found) return false;
        w.improvement = (n / total_) * best;
        return true;
    }

    std::pair<std::unique_ptr<Pending>, std::unique_ptr<Pending>> split(Pending& w) {
        auto left = std::make_unique<Pending>();
        auto right = std::make_unique<Pending>();
        double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
        for (auto slot : w.slots) {
            const bool goes_left = val(slot, w.feature) <= w.threshold;
            goes_left_[slot] = goes_left ? 1 : 0;
            const bool pos = y_[rows_[slot]] != 0;
            if (goes_left) {
                left->slots.push_back(slot);
                (pos ? l1 : l0) += 1;
            } else {
                right->slots.push_back(slot);
                (pos ? r1 : r0) += 1;
            }
        }
        left->sorted.resize(x_.d);
        right->sorted.resize(x_.d);
        for (std::size_t f = 0; f < x_.d; ++f) {
            left->sorted[f].reserve(left->slots.size());
            right->sorted[f].reserve(right->slots.size());
            for (auto slot : w.sorted[f]) (goes_left_[slot] ? left : right)->sorted[f].push_back(slot);
            std::vector<std::uint32_t>().swap(w.sorted[f]);
        }
        left->depth = right->depth = w.depth + 1;
        left->node = add_node(l0, l1);
        right->node = add_node(r0, r1);
        auto& parent = tree_.nodes[static_cast<std::size_t>(w.node)];
        parent.feature = static_cast<std::int32_t>(w.feature);
        parent.threshold = w.threshold;
        parent.left = left->node;
        parent.right = right->node;
        return {std::move(left), std::move(right)};
    }

    const Columns& x_;
    std::span<const std::uint8_t> y_;
    std::vector<std::uint32_t> rows_;
    TreeParams p_;
    Rng rng_;
    std::size_t mf_;
    double total_ = 0;
    TreeModel tree_;
    std::vector<std::uint8_t> goes_left_;
};

std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> r(n);
    std::iota(r.begin(), r.end(), 0u);
    return r;
}

TreeModel fit_tree(const Columns& x, std::span<const std::uint8_t> y, const TreeParams& p, std::uint64_t seed) {
    return CartBuilder(x, y, all_rows(x.n), p, seed).build();
}

ForestModel fit_forest(const Columns& x, std::span<const std::uint8_t> y, const TreeParams& p,
                       std::size_t n_estimators, bool bootstrap, std::uint64_t seed, std::size_t jobs) {
    ForestModel forest;
    forest.bootstrap = bootstrap;
    forest.trees.resize(n_estimators);
    forest.tree_seeds.resize(n_estimators);
    for (std::size_t i = 0; i < n_estimators; ++i) forest.tree_seeds[i] = derive_seed(seed, i);
    parallel_for(n_estimators, jobs, [&](std::size_t i) {
        Rng boot(forest.tree_seeds[i]);
        std::vector<std::uint32_t> rows;
        if (bootstrap) {
            rows.resize(x.n);
            for (auto& r : rows) r = static_cast<std::uint32_t>(boot.below(x.n));
        } else {
            rows = all_rows(x.n);
        }
        forest.trees[i] = CartBuilder(x, y, std::move(rows), p, derive_seed(forest.tree_seeds[i], {"split"})).build();
    });
    return forest;
}

// ---- boosting ---------------------------------------------------------------

struct BoostParams {
    bool linear = false;
    std::optional<std::size_t> max_depth;
    std::size_t n_estimators = 100;
    double eta = 0.3;
    double min_child_weight = 1;
    double gamma = 0;
    double lambda = kLambdaDefault;
};

/// Exact greedy second-order tree, grown level by level over feature orders
/// presorted once per fit.
TreeModel fit_boost_tree(const Columns& x, const std::vector<std::vector<std::uint32_t>>& presorted,
                         std::span<const double> g, std::span<const double> h, const BoostParams& p) {
    const std::size_t n = x.n;
    TreeModel tree;
    std::vector<std::int32_t> node_of(n, 0);
    struct Stat {
        double G = 0, H = 0;
    };
    std::vector<Stat> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
        stats[0].G += g[i];
        stats[0].H += h[i];
    }
    auto leaf_value = [&](const Stat& s) { return -s.G / (s.H + p.lambda); };
    tree.nodes.push_back(TreeNode{});
    tree.nodes[0].value = leaf_value(stats[0]);

    std::vector<std::int32_t> active{0};
    std::size_t depth = 0;
    while (!active.empty() && (!p.max_depth || depth < *p.max_depth)) {
        struct Best {
            bool found = false;
            double gain = 0;
            std::size_t feature = 0;
            double threshold = 0;
        };
        struct Scan {
            double GL = 0, HL = 0, last = 0;
            bool any = false;
        };
        std::vector<std::int32_t> slot(tree.nodes.size(), -1);
        for (std::size_t a = 0; a < active.size(); ++a) slot[static_cast<std::size_t>(active[a])] = static_cast<std::int32_t>(a);
        std::vector<Best> best(active.size());
        for (std::size_t f = 0; f < x.d; ++f) {
            std::vector<Scan> scan(active.size());
            for (auto r : presorted[f]) {
                const std::int32_t nd = node_of[r];
                if (nd < 0) continue;
                const std::int32_t a = slot[static_cast<std::size_t>(nd)];
                if (a < 0) continue;
                auto& sc = scan[static_cast<std::size_t>(a)];
                const double v = x.at(r, f);
                if (sc.any && v > sc.last) {
                    const Stat& s = stats[static_cast<std::size_t>(nd)];
                    const double GR = s.G - sc.GL, HR = s.H - sc.HL;
                    if (sc.HL >= p.min_child_weight && HR >= p.min_child_weight) {
                        const double gain = 0.5 * (sc.GL * sc.GL / (sc.HL + p.lambda) + GR * GR / (HR + p.lambda) -
                                                   s.G * s.G / (s.H + p.lambda)) -
                                            p.gamma;
                        auto& b = best[static_cast<std::size_t>(a)];
                        if (gain > 0 && (!b.found || gain > b.gain)) {
                            b = {true, gain, f, midpoint(sc.last, v)};
                        }
                    }
                }
                sc.GL += g[r];
                sc.HL += h[r];
                sc.last = v;
                sc.any = true;
            }
        }
        std::vector<std::int32_t> next;
        for (std::size_t a = 0; a < active.size(); ++a) {
            if (!best[a].found) continue;
            const auto nd = static_cast<std::size_t>(active[a]);
            const auto l = static_cast<std::int32_t>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{});
            tree.nodes.push_back(TreeNode{});
            stats.resize(tree.nodes.size());
            tree.nodes[nd].feature = static_cast<std::int32_t>(best[a].feature);
            tree.nodes[nd].threshold = best[a].threshold;
            tree.nodes[nd].left = l;
            tree.nodes[nd].right = l + 1;
            next.push_back(l);
            next.push_back(l + 1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::int32_t nd = node_of[i];
            if (nd < 0) continue;
            const auto& node = tree.nodes[static_cast<std::size_t>(nd)];
            if (node.feature < 0) {
                node_of[i] = -1;  // finished leaf
                continue;
            }
            const std::int32_t child = x.at(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
            node_of[i] = child;
            stats[static_cast<std::size_t>(child)].G += g[i];
            stats[static_cast<std::size_t>(child)].H += h[i];
        }
        for (auto c : next) tree.nodes[static_cast<std::size_t>(c)].value = leaf_value(stats[static_cast<std::size_t>(c)]);
        active = std::move(next);
        ++depth;
    }
    return tree;
}

BoostedModel fit_boost(const Columns& x, std::span<const std::uint8_t> y, const BoostParams& p) {
    BoostedModel model;
    model.booster = p.linear ? BoostedModel::Booster::linear : BoostedModel::Booster::tree;
    model.learning_rate = p.eta;
    model.base_score = 0.5;
    const std::size_t n = x.n;
    const double base_margin = std::log(model.base_score / (1.0 - model.base_score));
    std::vector<double> margin(n, base_margin), g(n), h(n);
    auto gradients = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            const double pr = sigmoid(margin[i]);
            g[i] = pr - y[i];
            h[i] = std::max(pr * (1.0 - pr), 1e-16);
        }
    };

    if (!p.linear) {
        std::vector<std::vector<std::uint32_t>> presorted(x.d, all_rows(n));
        for (std::size_t f = 0; f < x.d; ++f) {
            std::stable_sort(presorted[f].begin(), presorted[f].end(),
                             [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
        }
        for (std::size_t t = 0; t < p.n_estimators; ++t) {
            gradients();
            model.trees.push_back(fit_boost_tree(x, presorted, g, h, p));
            const auto& tree = model.trees.back();
            std::vector<double> row(x.d);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < x.d; ++j) row[j] = x.at(i, j);
                margin[i] += p.eta * tree.predict(row);
            }
        }
        return model;
    }

    // Coordinate descent: bias first, then each weight in column order. Gradients
    // are updated by their first-order change after each coordinate step.
    std::vector<double> w(x.d, 0.0);
    for (std::size_t t = 0; t < p.n_estimators; ++t) {
        gradients();
        double G = 0, H = 0;
        for (std::size_t i = 0; i < n; ++i) {
            G += g[i];
            H += h[i];
        }
        const double db = H > 0 ? -G / H : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += p.eta * db;
            g[i] += h[i] * p.eta * db;
        }
        model.bias_steps.push_back(db);
        std::vector<double> steps(x.d, 0.0);
        for (std::size_t j = 0; j < x.d; ++j) {
            double sg = 0, sh = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = x.at(i, j);
                sg += g[i] * v;
                sh += h[i] * v * v;
            }
            if (sh < 1e-5) continue;
            const double dw = -(sg + p.lambda * w[j]) / (sh + p.lambda);
            steps[j] = dw;
            w[j] += p.eta * dw;
            for (std::size_t i = 0; i < n; ++i) {
                const double dm = p.eta * dw * x.at(i, j);
                margin[i] += dm;
                g[i] += h[i] * dm;
            }
        }
        model.weight_steps.push_back(std::move(steps));
    }
    return model;
}

// ---- LDA -------------------------------------------------------------------------

/// Ledoit-Wolf shrinkage toward (tr S / d) I for the centered sample matrix:
///   S = X'X / n, mu = tr S / d,
///   delta = |S - mu I|_F^2 / d,
///   beta = (sum_ij (X.^2)'(X.^2) / n - |S|_F^2) / (d n), capped at delta,
///   alpha = beta / delta.
double ledoit_wolf(const Eigen::MatrixXd& xc) {
    const double n = static_cast<double>(xc.rows()), d = static_cast<double>(xc.cols());
    const Eigen::MatrixXd s = xc.transpose() * xc / n;
    const double mu = s.trace() / d;
    const Eigen::MatrixXd x2 = xc.array().square().matrix();
    const double beta_raw = (x2.transpose() * x2).sum();
    const double delta_raw = s.squaredNorm();
    double beta = (beta_raw / n - delta_raw) / (d * n);
    double delta = (delta_raw - 2.0 * mu * s.trace() + d * mu * mu) / d;
    beta = std::min(beta, delta);
    if (beta <= 0 || delta <= 0) return 0.0;
    return beta / delta;
}

LdaModel fit_lda(const DatasetTable& t, std::span<const std::uint8_t> y, const Params& p) {
    LdaModel m;
    m.solver = p.choice("solver", {"svd", "lsqr", "eigen"});
    const std::size_t n = t.rows(), d = t.cols();
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)), mu1 = mu0;
    double n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = t.row(i);
        Eigen::Map<const Eigen::VectorXd> v(r.data(), static_cast<Eigen::Index>(d));
        if (y[i]) {
            mu1 += v;
            n1 += 1;
        } else {
            mu0 += v;
            n0 += 1;
        }
    }
    mu0 /= n0;
    mu1 /= n1;
    Eigen::MatrixXd xc(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        auto r = t.row(i);
        Eigen::Map<const Eigen::VectorXd> v(r.data(), static_cast<Eigen::Index>(d));
        xc.row(static_cast<Eigen::Index>(i)) = (v - (y[i] ? mu1 : mu0)).transpose();
    }
    Eigen::MatrixXd cov = xc.transpose() * xc / static_cast<double>(n);
    if (p.none("shrinkage")) m.shrinkage = 0;
    else if (p.text("shrinkage") == "auto") m.shrinkage = ledoit_wolf(xc);
    else {
        m.shrinkage = p.real("shrinkage");
        if (m.shrinkage < 0 || m.shrinkage > 1) p.bad("shrinkage");
    }
    if (m.shrinkage > 0) {
        const double target = cov.trace() / static_cast<double>(d);
        cov = (1.0 - m.shrinkage) * cov;
        cov.diagonal().array() += m.shrinkage * target;
    }
    // Pseudo-inverse through the eigendecomposition covers singular covariances
    // (constant columns after scaling are common).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double tol = std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * static_cast<double>(d) * 1e-12;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > tol) inv(i) = 1.0 / ev(i);
    }
    const Eigen::MatrixXd& v = eig.eigenvectors();
    const Eigen::VectorXd w = v * inv.asDiagonal() * (v.transpose() * (mu1 - mu0));

    m.prior0 = n0 / static_cast<double>(n);
    m.prior1 = n1 / static_cast<double>(n);
    m.weights.assign(w.data(), w.data() + w.size());
    m.bias = -0.5 * w.dot(mu0 + mu1) + std::log(m.prior1 / m.prior0);
    m.mean0.assign(mu0.data(), mu0.data() + mu0.size());
    m.mean1.assign(mu1.data(), mu1.data() + mu1.size());
    m.covariance.resize(d * d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            m.covariance[i * d + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    return m;
}

// ---- JSON ------------------------------------------------------------------------

json tree_to_json(const TreeModel& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array(), n0 = json::array(), n1 = json::array();
    for (const auto& nd : t.nodes) {
        feature.push_back(nd.feature);
        threshold.push_back(nd.threshold);
        left.push_back(nd.left);
        right.push_back(nd.right);
        value.push_back(nd.value);
        n0.push_back(nd.n0);
        n1.push_back(nd.n1);
    }
    return json{{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                {"value", value},     {"n0", n0},               {"n1", n1}};
}

TreeModel tree_from_json(const json& j) {
    TreeModel t;
    const std::size_t n = j.at("feature").size();
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& nd = t.nodes[i];
        nd.feature = j.at("feature")[i].get<std::int32_t>();
        nd.threshold = j.at("threshold")[i].get<double>();
        nd.left = j.at("left")[i].get<std::int32_t>();
        nd.right = j.at("right")[i].get<std::int32_t>();
        nd.value = j.at("value")[i].get<double>();
        nd.n0 = j.at("n0")[i].get<double>();
        nd.n1 = j.at("n1")[i].get<double>();
        if (nd.feature >= 0 && (nd.left <= static_cast<std::int32_t>(i) || nd.right <= static_cast<std::int32_t>(i) ||
                                static_cast<std::size_t>(std::max(nd.left, nd.right)) >= n)) {
            throw Error(ErrorCode::parse_error, "malformed tree node " + std::to_string(i));
        }
    }
    if (n == 0) throw Error(ErrorCode::parse_error, "empty tree");
    return t;
}

struct BodyToJson {
    json operator()(const ConstantModel& m) const { return {{"kind", "constant"}, {"score", m.score}}; }
    json operator()(const LdaModel& m) const {
        return {{"kind", "lda"},         {"solver", m.solver},       {"shrinkage", m.shrinkage},
                {"prior0", m.prior0},    {"prior1", m.prior1},       {"mean0", m.mean0},
                {"mean1", m.mean1},      {"covariance", m.covariance}, {"weights", m.weights},
                {"bias", m.bias}};
    }
    json operator()(const TreeModel& m) const { return {{"kind", "tree"}, {"tree", tree_to_json(m)}}; }
    json operator()(const ForestModel& m) const {
        json trees = json::array();
        for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
        return {{"kind", "forest"}, {"bootstrap", m.bootstrap}, {"tree_seeds", m.tree_seeds}, {"trees", trees}};
    }
    json operator()(const BoostedModel& m) const {
        json trees = json::array();
        for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
        return {{"kind", "boosted"},
                {"booster", m.booster == BoostedModel::Booster::tree ? "gbtree" : "gblinear"},
                {"learning_rate", m.learning_rate},
                {"base_score", m.base_score},
                {"trees", trees},
                {"bias_steps", m.bias_steps},
                {"weight_steps", m.weight_steps}};
    }
};

ModelBody body_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") return ConstantModel{j.at("score").get<double>()};
    if (kind == "lda") {
        LdaModel m;
        m.solver = j.at("solver").get<std::string>();
        m.shrinkage = j.at("shrinkage").get<double>();
        m.prior0 = j.at("prior0").get<double>();
        m.prior1 = j.at("prior1").get<double>();
        m.mean0 = j.at("mean0").get<std::vector<double>>();
        m.mean1 = j.at("mean1").get<std::vector<double>>();
        m.covariance = j.at("covariance").get<std::vector<double>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        return m;
    }
    if (kind == "tree") return tree_from_json(j.at("tree"));
    if (kind == "forest") {
        ForestModel m;
        m.bootstrap = j.at("bootstrap").get<bool>();
        m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        return m;
    }
    if (kind == "boosted") {
        BoostedModel m;
        m.booster = j.at("booster").get<std::string>() == "gblinear" ? BoostedModel::Booster::linear
                                                                     : BoostedModel::Booster::tree;
        m.learning_rate = j.at("learning_rate").get<double>();
        m.base_score = j.at("base_score").get<double>();
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        m.bias_steps = j.at("bias_steps").get<std::vector<double>>();
        m.weight_steps = j.at("weight_steps").get<std::vector<std::vector<double>>>();
        return m;
    }
    throw Error(ErrorCode::parse_error, "unknown model kind '" + kind + "'");
}

}  // namespace

// ---- model types -----------------------------------------------------------------

double TreeModel::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& nd = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
    }
    return nodes[i].value;
}

std::size_t TreeModel::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

std::size_t TreeModel::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

double BoostedModel::margin(std::span<const double> x, std::size_t upto) const {
    double m = std::log(base_score / (1.0 - base_score));
    if (booster == Booster::tree) {
        for (std::size_t t = 0; t < upto && t < trees.size(); ++t) m += learning_rate * trees[t].predict(x);
        return m;
    }
    for (std::size_t t = 0; t < upto && t < bias_steps.size(); ++t) {
        double stage = bias_steps[t];
        const auto& w = weight_steps[t];
        for (std::size_t j = 0; j < w.size() && j < x.size(); ++j) stage += w[j] * x[j];
        m += learning_rate * stage;
    }
    return m;
}

Model::Model(Family family, ParamMap params, std::uint64_t seed, std::vector<std::string> features, ModelBody body,
             std::string warning)
    : family_(family),
      params_(std::move(params)),
      seed_(seed),
      features_(std::move(features)),
      body_(std::move(body)),
      warning_(std::move(warning)) {}

double Model::score(std::span<const double> x) const {
    struct Visitor {
        std::span<const double> x;
        double operator()(const ConstantModel& m) const { return m.score; }
        double operator()(const LdaModel& m) const {
            double z = m.bias;
            for (std::size_t j = 0; j < m.weights.size(); ++j) z += m.weights[j] * x[j];
            return sigmoid(z);
        }
        double operator()(const TreeModel& m) const { return m.predict(x); }
        double operator()(const ForestModel& m) const {
            double s = 0;
            for (const auto& t : m.trees) s += t.predict(x);
            return m.trees.empty() ? 0.0 : s / static_cast<double>(m.trees.size());
        }
        double operator()(const BoostedModel& m) const { return sigmoid(m.margin(x)); }
    };
    const double s = std::visit(Visitor{x}, body_);
    return std::isfinite(s) ? s : 0.5;
}

std::string Model::to_json() const {
    json j{{"format", kModelFormat},     {"family", family_name(family_)}, {"params", params_},
           {"seed", seed_},              {"features", features_},          {"warning", warning_},
           {"model", std::visit(BodyToJson{}, body_)}};
    return j.dump();
}

Model Model::from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != kModelFormat) {
            throw Error(ErrorCode::parse_error, "unsupported model format " + j.at("format").dump());
        }
        return Model(parse_family(j.at("family").get<std::string>()), j.at("params").get<ParamMap>(),
                     j.at("seed").get<std::uint64_t>(), j.at("features").get<std::vector<std::string>>(),
                     body_from_json(j.at("model")), j.value("warning", std::string{}));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("model file: ") + e.what());
    }
}

Model fit(Family family, const ParamMap& params, const DatasetTable& train, std::uint64_t seed, std::size_t jobs) {
    const Params p(family, params);
    const auto y = train.binary_targets();
    std::size_t n1 = 0;
    for (auto v : y) n1 += v;
    if (train.rows() == 0) throw Error(ErrorCode::invalid_argument, "empty training set");

    // Validate every parameter even when training degenerates.
    std::optional<TreeParams> tp;
    BoostParams bp;
    switch (family) {
        case Family::lda:
            p.choice("solver", {"svd", "lsqr", "eigen"});
            if (!p.none("shrinkage") && p.text("shrinkage") != "auto") p.real("shrinkage");
            break;
        case Family::dt: tp = tree_params(p, true); break;
        case Family::rf:
            tp = tree_params(p, false);
            p.count("n_estimators");
            p.flag("bootstrap");
            break;
        case Family::xgb:
            bp.linear = p.choice("booster", {"gbtree", "gblinear"}) == "gblinear";
            bp.max_depth = p.opt_count("max_depth");
            if (bp.max_depth && *bp.max_depth == 0) bp.max_depth.reset();
            bp.n_estimators = p.count("n_estimators");
            bp.eta = p.real("learning_rate");
            bp.min_child_weight = p.real("min_child_weight");
            bp.gamma = p.real("gamma");
            bp.lambda = p.real("reg_lambda");
            if (bp.eta < 0 || bp.min_child_weight < 0 || bp.gamma < 0 || bp.lambda < 0) p.bad("learning_rate");
            break;
    }

    if (n1 == 0 || n1 == y.size()) {
        return Model(family, p.map(), seed, train.feature_names(), ConstantModel{n1 == 0 ? 0.0 : 1.0},
                     "DegenerateTraining: training set holds a single class; using a constant score");
    }

    ModelBody body;
    switch (family) {
        case Family::lda: body = fit_lda(train, y, p); break;
        case Family::dt: body = fit_tree(Columns(train), y, *tp, seed); break;
        case Family::rf:
            body = fit_forest(Columns(train), y, *tp, p.count("n_estimators"), p.flag("bootstrap"), seed, jobs);
            break;
        case Family::xgb: body = fit_boost(Columns(train), y, bp); break;
    }
    return Model(family, p.map(), seed, train.feature_names(), std::move(body));
}

namespace {

/// Column positions of the model's features in `table`.
std::vector<std::size_t> feature_map(const std::vector<std::string>& features, const DatasetTable& table) {
    std::vector<std::size_t> idx(features.size());
    const bool same = features == table.feature_names();
    for (std::size_t j = 0; j < features.size(); ++j) {
        if (same) {
            idx[j] = j;
            continue;
        }
        auto c = table.column_index(features[j]);
        if (!c) throw Error(ErrorCode::schema_mismatch, "input lacks model feature '" + features[j] + "'");
        idx[j] = *c;
    }
    return idx;
}

}  // namespace

ScoredPrediction predict(const Model& model, const DatasetTable& table, double threshold) {
    const auto idx = feature_map(model.feature_names(), table);
    ScoredPrediction out;
    out.threshold = threshold;
    out.scores.resize(table.rows());
    out.labels.resize(table.rows());
    std::vector<double> row(idx.size());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < idx.size(); ++j) row[j] = table.at(i, idx[j]);
        out.scores[i] = model.score(row);
        out.labels[i] = out.scores[i] >= threshold ? 1 : 0;
    }
    return out;
}

std::vector<double> staged_log_loss(const BoostedModel& model, const DatasetTable& table) {
    const auto y = table.binary_targets();
    std::vector<double> out;
    for (std::size_t t = 0; t <= model.stages(); ++t) {
        double loss = 0;
        for (std::size_t i = 0; i < table.rows(); ++i) {
            const double m = model.margin(table.row(i), t);
            // log(1 + e^{-m}) for positives, log(1 + e^{m}) for negatives
            const double z = y[i] ? -m : m;
            loss += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        }
        out.push_back(table.rows() ? loss / static_cast<double>(table.rows()) : 0.0);
    }
    return out;
}

GridSearchResult grid_search(Family family, const ParamGrid& grid, const DatasetTable& train, std::uint64_t seed,
                             const GridSearchConfig& cfg) {
    const std::size_t cells = grid_size(grid);
    if (grid.empty() || cells == 0) throw Error(ErrorCode::invalid_argument, "empty hyperparameter grid");
    GridSearchResult r;
    r.cell_scores.assign(cells, 0.0);

    const std::size_t n = train.rows();
    if (n >= 4) {
        const auto want = static_cast<std::size_t>(std::llround(cfg.subset_fraction * static_cast<double>(n)));
        const std::size_t sub_n = std::clamp<std::size_t>(want, 2, n);
        Rng rng(derive_seed(seed, {"grid-subset"}));
        const auto idx = rng.sample_without_replacement(n, sub_n);
        const auto subset = train.take_rows(idx);
        const auto [fit_part, val_part] = split_train_test(subset, cfg.fit_fraction, derive_seed(seed, {"grid-split"}));
        const auto truth = val_part.binary_targets();
        parallel_for(cells, cfg.jobs, [&](std::size_t c) {
            const auto m = fit(family, grid_cell(grid, c), fit_part, seed, 1);
            const auto pred = predict(m, val_part);
            r.cell_scores[c] = mcc(confusion(truth, pred.labels));
        });
    }
    r.best_index = 0;
    for (std::size_t c = 1; c < cells; ++c) {
        if (r.cell_scores[c] > r.cell_scores[r.best_index]) r.best_index = c;
    }
    r.best_score = r.cell_scores[r.best_index];
    r.best = grid_cell(grid, r.best_index);
    r.model = fit(family, r.best, train, seed, cfg.jobs);
    return r;
}

}  // namespace nidsgen
