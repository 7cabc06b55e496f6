#pragma once
// Greedy MID/MIQ selection over small-integer columns. Mutual information is
// recomputed from joint count maps at every step; nothing is cached.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

inline double mi(const std::vector<long>& a, const std::vector<long>& b) {
    std::map<std::pair<long, long>, double> joint;
    std::map<long, double> pa, pb;
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        pa[a[i]] += 1;
        pb[b[i]] += 1;
    }
    double h = 0;
    for (const auto& [ab, c] : joint) h += c / n * std::log2(c * n / (pa[ab.first] * pb[ab.second]));
    return std::max(0.0, h);
}

struct GreedyStep {
    std::size_t index;
    double relevance, redundancy, score;
};

/// Every step scores every remaining column; the best score wins, and scores
/// within `tie` (relative, floor 1) of the best go to the lower index.
inline std::vector<GreedyStep> greedy(const std::vector<std::vector<long>>& cols, const std::vector<long>& y,
                                      std::size_t k, bool quotient, double tie) {
    std::vector<GreedyStep> out;
    std::vector<bool> used(cols.size(), false);
    for (std::size_t step = 0; step < k; ++step) {
        std::vector<GreedyStep> cand;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (used[j]) continue;
            const double rel = mi(cols[j], y);
            double red = 0;
            for (const auto& s : out) red += mi(cols[j], cols[s.index]);
            if (!out.empty()) red /= static_cast<double>(out.size());
            double score = rel;
            if (!out.empty()) score = quotient ? rel / std::max(red, 1e-12) : rel - red;
            cand.push_back({j, rel, red, score});
        }
        double best = cand[0].score;
        for (const auto& c : cand) best = std::max(best, c.score);
        for (const auto& c : cand) {
            if (c.score >= best - tie * std::max(1.0, std::abs(best))) {
                out.push_back(c);
                used[c.index] = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace oracle
