#pragma once
// Metric formulas restated through precision/recall style ratios, plus a
// pairwise AUROC count. Independent of the library's confusion arithmetic.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace oracle {

/// MCC as sqrt(PPV*TPR*TNR*NPV) - sqrt(FDR*FNR*FPR*FOR); 0 when a marginal is empty.
inline double mcc(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
    const long double TP = tp, TN = tn, FP = fp, FN = fn;
    if (TP + FP == 0 || TP + FN == 0 || TN + FP == 0 || TN + FN == 0) return 0.0;
    const long double ppv = TP / (TP + FP), tpr = TP / (TP + FN), tnr = TN / (TN + FP), npv = TN / (TN + FN);
    const long double fdr = FP / (TP + FP), fnr = FN / (TP + FN), fpr = FP / (TN + FP), fo = FN / (TN + FN);
    return static_cast<double>(std::sqrt(ppv * tpr * tnr * npv) - std::sqrt(fdr * fnr * fpr * fo));
}

/// Harmonic mean of precision and recall.
inline double f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    if (tp == 0) return 0.0;
    const long double p = (long double)tp / (tp + fp), r = (long double)tp / (tp + fn);
    return static_cast<double>(2 * p * r / (p + r));
}

/// Fraction of (positive, negative) pairs ranked correctly, ties count half.
inline double auroc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    std::uint64_t twice = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            ++pairs;
            twice += s[i] > s[j] ? 2 : s[i] == s[j] ? 1 : 0;
        }
    }
    return static_cast<double>(twice) / 2.0 / static_cast<double>(pairs);
}

}  // namespace oracle
