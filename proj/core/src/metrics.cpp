#include "nidsgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nidsgen/error.hpp"

namespace nidsgen {

Confusion confusion(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted) {
    if (truth.size() != predicted.size()) throw Error(ErrorCode::invalid_argument, "truth/prediction length mismatch");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] != 0, p = predicted[i] != 0;
        if (t && p) ++c.tp;
        else if (!t && !p) ++c.tn;
        else if (p) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double mcc(const Confusion& c) {
    const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
    const double a = tp + fp, b = tp + fn, d = tn + fp, e = tn + fn;
    if (a == 0 || b == 0 || d == 0 || e == 0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(a * b * d * e);
}

double f1(const Confusion& c) {
    const double denom = 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp) + static_cast<double>(c.fn);
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::invalid_argument, "scores/labels length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l != 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::single_class_labels, "AUROC needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Ranks are 1-based; a tie group spanning positions [i, j) gets (i + j + 1) / 2.
    double pos_rank_sum = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) pos_rank_sum += rank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

MetricsReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
    std::vector<std::uint8_t> predicted(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= threshold ? 1 : 0;
    MetricsReport r;
    r.counts = confusion(labels, predicted);
    r.mcc = mcc(r.counts);
    r.f1 = f1(r.counts);
    bool has_pos = false, has_neg = false;
    for (auto l : labels) (l ? has_pos : has_neg) = true;
    if (has_pos && has_neg) r.auroc = auroc(scores, labels);
    return r;
}

}  // namespace nidsgen
