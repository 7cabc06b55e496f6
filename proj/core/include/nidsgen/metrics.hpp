#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace nidsgen {

/// Binary confusion counts; positive = malicious.
struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t n() const noexcept { return tp + tn + fp + fn; }
    bool operator==(const Confusion&) const = default;
};

Confusion confusion(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted);

/// Matthews correlation coefficient. 0 when any marginal is empty.
double mcc(const Confusion& c);
/// 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double f1(const Confusion& c);
/// Mann-Whitney statistic with average ranks for ties. Throws SingleClassLabels.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Accuracy is deliberately absent: it is dominated by the benign majority.
struct MetricsReport {
    Confusion counts;
    double mcc = 0;
    double f1 = 0;
    /// Absent when the evaluated labels hold a single class.
    std::optional<double> auroc;
};

/// Labels are score >= threshold.
MetricsReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold = 0.5);

}  // namespace nidsgen
