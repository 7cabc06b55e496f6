#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "../oracles/mrmr_oracle.hpp"
#include "../support/mrmr_data.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/mrmr.hpp"
#include "nidsgen/rng.hpp"

using namespace nidsgen;


TEST(MutualInformation, Examples) {
    std::vector<std::uint32_t> y{0, 1, 0, 1, 0, 1, 0, 1};
    EXPECT_EQ(mutual_information(std::vector<double>(8, 3.0), y), 0.0);
    std::vector<double> x(y.begin(), y.end());
    EXPECT_NEAR(mutual_information(x, y), 1.0, 1e-12);
    std::vector<std::uint32_t> y3{0, 0, 0, 1};
    EXPECT_NEAR(mutual_information(std::vector<double>{0, 0, 0, 1}, y3), 0.8112781244591328, 1e-12);
}

TEST(MutualInformation, SymmetricAndMonotoneInvariant) {
    Rng rng(4);
    std::vector<double> x(500);
    std::vector<std::uint32_t> y(500);
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = static_cast<std::uint32_t>(rng.below(2));
        x[i] = rng.normal() + 2.0 * y[i];
    }
    const auto cx = discretize(x);
    EXPECT_NEAR(mutual_information_codes(cx, y), mutual_information_codes(y, cx), 1e-12);
    std::vector<double> tx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) tx[i] = std::exp(x[i]) * 10 + 3;
    EXPECT_EQ(discretize(tx), cx);
    EXPECT_EQ(mutual_information(tx, y), mutual_information(x, y));
}

TEST(Discretize, QuantileBinsAndDistinctCodes) {
    std::vector<double> few{5, 1, 5, 3};
    EXPECT_EQ(discretize(few), (std::vector<std::uint32_t>{2, 0, 2, 1}));
    std::vector<double> many(1000);
    for (std::size_t i = 0; i < many.size(); ++i) many[i] = static_cast<double>(i * i);
    const auto c = discretize(many, 16);
    EXPECT_EQ(*std::max_element(c.begin(), c.end()), 15u);
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LE(c[i - 1], c[i]);
}

TEST(Mrmr, RedundantCopyIsPushedDown) {
    Rng rng(6);
    std::vector<double> v;
    std::vector<std::string> l;
    for (int i = 0; i < 2000; ++i) {
        const bool bad = rng.below(2);
        const double x1 = rng.below(10) ? bad : !bad;
        const double x3 = rng.below(5) ? bad : !bad;
        v.insert(v.end(), {x1, x1, x3, static_cast<double>(rng.below(4))});
        l.push_back(bad ? "Bot" : "Benign");
    }
    const DatasetTable t({"x1", "x2", "x3", "noise"}, v, l);
    const auto r = mrmr_rank(t, 4);
    // The copy keeps full relevance but carries redundancy 1 with x1, so it
    // falls behind even the noise column.
    EXPECT_EQ(r.names, (std::vector<std::string>{"x1", "x3", "noise", "x2"}));
    EXPECT_NEAR(r.relevance[3], r.relevance[0], 1e-12);
}

TEST(Mrmr, KOutOfRange) {
    const DatasetTable t({"a", "b"}, {1, 2, 3, 4}, {"Benign", "Bot"});
    for (std::size_t k : {0u, 3u}) {
        try {
            mrmr_rank(t, k);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::k_out_of_range);
        }
    }
    const auto all = mrmr_rank(t, 2);
    EXPECT_EQ(std::set<std::size_t>(all.indices.begin(), all.indices.end()).size(), 2u);
}

TEST(Mrmr, MatchesGreedyOracleAndPrefixProperty) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = testsupport::random_small(seed);
        const std::size_t d = s.cols.size();
        for (auto variant : {MrmrVariant::mid, MrmrVariant::miq}) {
            MrmrConfig cfg;
            cfg.variant = variant;
            const auto full = mrmr_rank(s.table, d, cfg);
            const auto ref = oracle::greedy(s.cols, s.y, d, variant == MrmrVariant::miq, kScoreTieTolerance);
            ASSERT_EQ(full.indices.size(), ref.size());
            for (std::size_t t = 0; t < d; ++t) {
                EXPECT_EQ(full.indices[t], ref[t].index) << "seed " << seed << " step " << t;
                EXPECT_NEAR(full.relevance[t], ref[t].relevance, 1e-12);
                EXPECT_NEAR(full.redundancy[t], ref[t].redundancy, 1e-12);
            }
            for (std::size_t k = 1; k <= d; ++k) {
                const auto part = mrmr_rank(s.table, k, cfg);
                EXPECT_TRUE(std::equal(part.indices.begin(), part.indices.end(), full.indices.begin()));
            }
        }
    }
}

TEST(Mrmr, ParallelEqualsSerial) {
    const auto s = testsupport::random_small(99);
    MrmrConfig par;
    par.jobs = 4;
    const auto a = mrmr_rank(s.table, s.cols.size());
    const auto b = mrmr_rank(s.table, s.cols.size(), par);
    EXPECT_EQ(a.indices, b.indices);
    EXPECT_EQ(a.score, b.score);
}

TEST(Mrmr, SweepCountsArePrefixes) {
    Rng rng(1);
    std::vector<double> v;
    std::vector<std::string> names, l;
    for (int j = 0; j < 20; ++j) names.push_back("c" + std::to_string(j));
    for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 20; ++j) v.push_back(rng.uniform());
        l.push_back(i % 2 ? "Bot" : "Benign");
    }
    const auto r = mrmr_rank(DatasetTable(names, v, l), 20);
    const auto subsets = sweep_counts(r);
    ASSERT_EQ(subsets.size(), 7u);
    for (const auto& s : subsets) EXPECT_TRUE(std::equal(s.begin(), s.end(), r.names.begin()));
    const auto five = mrmr_rank(DatasetTable(names, v, l), 5);
    const std::size_t ten[] = {10};
    EXPECT_THROW(sweep_counts(five, ten), Error);
}

TEST(Mrmr, RankingCsvRoundTrip) {
    const auto s = testsupport::random_small(3);
    const auto r = mrmr_rank(s.table, s.cols.size());
    std::stringstream io;
    write_ranking_csv(r, io);
    const auto back = read_ranking_csv(io);
    EXPECT_EQ(back.names, r.names);
    EXPECT_EQ(back.indices, r.indices);
    EXPECT_EQ(back.score, r.score);
    EXPECT_EQ(back.variant, r.variant);
}
