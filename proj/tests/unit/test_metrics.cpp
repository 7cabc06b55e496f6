#include <gtest/gtest.h>

#include <cmath>

#include "../oracles/metrics_oracle.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/metrics.hpp"
#include "nidsgen/rng.hpp"

using namespace nidsgen;

TEST(Mcc, Examples) {
    EXPECT_DOUBLE_EQ(mcc({5, 5, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(mcc({0, 0, 5, 5}), -1.0);
    EXPECT_NEAR(mcc({2, 3, 1, 0}), 6.0 / std::sqrt(72.0), 1e-15);
    EXPECT_EQ(mcc({0, 7, 0, 3}), 0.0);  // never predicts malicious
    EXPECT_EQ(mcc({4, 0, 6, 0}), 0.0);
}

TEST(F1, Examples) {
    EXPECT_DOUBLE_EQ(f1({5, 5, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(f1({2, 0, 1, 0}), 0.8);
    EXPECT_EQ(f1({0, 9, 1, 1}), 0.0);
    EXPECT_EQ(f1({0, 9, 0, 0}), 0.0);
}

TEST(Auroc, Examples) {
    const std::vector<std::uint8_t> y{1, 1, 0, 0};
    EXPECT_DOUBLE_EQ(auroc(std::vector<double>{0.9, 0.8, 0.7, 0.1}, y), 1.0);
    EXPECT_DOUBLE_EQ(auroc(std::vector<double>{0.9, 0.4, 0.6, 0.1}, y), 0.75);
    EXPECT_DOUBLE_EQ(auroc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, y), 0.5);
}

TEST(Auroc, SingleClassThrows) {
    try {
        auroc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::single_class_labels);
    }
}

TEST(Metrics, RandomConfusionsMatchFormulaOracle) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const Confusion c{rng.below(1000), rng.below(1000), rng.below(1000), rng.below(1000)};
        EXPECT_NEAR(mcc(c), oracle::mcc(c.tp, c.tn, c.fp, c.fn), 1e-12);
        EXPECT_NEAR(f1(c), oracle::f1(c.tp, c.fp, c.fn), 1e-12);
    }
}

TEST(Auroc, RandomSetsEqualPairwiseCountAndProperties) {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = static_cast<double>(rng.below(20)) / 4.0;  // coarse grid forces ties
            y[j] = static_cast<std::uint8_t>(rng.below(2));
        }
        y[0] = 0;
        y[1] = 1;
        const double a = auroc(s, y);
        EXPECT_EQ(a, oracle::auroc(s, y));
        std::vector<std::uint8_t> flipped(n);
        for (std::size_t j = 0; j < n; ++j) flipped[j] = !y[j];
        EXPECT_NEAR(a + auroc(s, flipped), 1.0, 1e-12);
        std::vector<double> t(n);
        for (std::size_t j = 0; j < n; ++j) t[j] = std::exp(3 * s[j]) - 7;
        EXPECT_EQ(auroc(t, y), a);
    }
}

TEST(Evaluate, ThresholdIsInclusive) {
    const std::vector<double> s{0.5, 0.49, 0.9, 0.1};
    const std::vector<std::uint8_t> y{1, 1, 0, 0};
    const auto r = evaluate(s, y, 0.5);
    EXPECT_EQ(r.counts, (Confusion{1, 1, 1, 1}));
    EXPECT_EQ(r.counts.n(), 4u);
    ASSERT_TRUE(r.auroc);
    EXPECT_FALSE(evaluate(s, std::vector<std::uint8_t>{0, 0, 0, 0}).auroc);
}
