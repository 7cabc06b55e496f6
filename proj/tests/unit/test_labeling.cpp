#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "nidsgen/error.hpp"
#include "nidsgen/labeling.hpp"

using namespace nidsgen;

namespace {

constexpr std::int64_t kSec = 1'000'000'000LL;

std::int64_t at(const char* iso) { return *parse_iso8601(iso); }

FlowEndpoints flow(const char* iso, const char* a, std::uint16_t ap, const char* b, std::uint16_t bp,
                   std::uint8_t proto = 6) {
    return {at(iso), {*IpAddress::parse(a), ap}, {*IpAddress::parse(b), bp}, proto};
}

ScheduleMatcher compile(const std::string& text) {
    std::istringstream in(text);
    return ScheduleMatcher::compile(parse_schedule(in));
}

}  // namespace

TEST(Iso8601, Forms) {
    EXPECT_EQ(at("1970-01-01T00:00:00Z"), 0);
    EXPECT_EQ(at("1970-01-01 00:00:01"), kSec);
    EXPECT_EQ(at("1970-01-01T01:00:00+01:00"), 0);
    EXPECT_EQ(at("2018-02-14T10:00:00.5Z"), 1518602400LL * kSec + kSec / 2);
    EXPECT_FALSE(parse_iso8601("2018-13-01T00:00:00"));
    EXPECT_FALSE(parse_iso8601("yesterday"));
}

TEST(Schedule, EmptyScheduleLabelsEverythingBenign) {
    const auto m = compile("# nothing\n");
    EXPECT_EQ(m.rule_count(), 0u);
    const auto out = m.label(flow("2018-02-14T10:30:00Z", "1.1.1.1", 1, "2.2.2.2", 2));
    EXPECT_EQ(out.kind, LabelOutcome::Kind::benign);
    EXPECT_EQ(out.label, "Benign");
}

TEST(Schedule, ContainmentEitherDirectionAndOutsideWindow) {
    const auto m = compile("DoS Hulk,2018-02-14T10:00:00Z,2018-02-14T11:00:00Z,172.16.0.1,192.168.20.1\n");
    EXPECT_EQ(m.rule_count(), 1u);
    EXPECT_EQ(m.label(flow("2018-02-14T10:30:00Z", "172.16.0.1", 5555, "192.168.20.1", 80)).label, "DoS Hulk");
    EXPECT_EQ(m.label(flow("2018-02-14T10:30:00Z", "192.168.20.1", 80, "172.16.0.1", 5555)).label, "DoS Hulk");
    EXPECT_EQ(m.label(flow("2018-02-14T12:00:00Z", "172.16.0.1", 5555, "192.168.20.1", 80)).label, "Benign");
    // Window ends are inclusive.
    EXPECT_EQ(m.label(flow("2018-02-14T11:00:00Z", "172.16.0.1", 1, "192.168.20.1", 80)).label, "DoS Hulk");
    EXPECT_EQ(m.label(flow("2018-02-14T10:30:00Z", "172.16.0.9", 1, "192.168.20.1", 80)).label, "Benign");
}

TEST(Schedule, EndBeforeStartIsMalformed) {
    try {
        compile("x,2018-02-14T11:00:00Z,2018-02-14T10:00:00Z,1.1.1.1,2.2.2.2\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::malformed_rule);
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
    EXPECT_THROW(compile("Benign,2018-02-14T10:00:00Z,2018-02-14T11:00:00Z,*,*\n"), Error);
    EXPECT_THROW(compile("x,not-a-time,2018-02-14T11:00:00Z,*,*\n"), Error);
    EXPECT_THROW(compile("x,2018-02-14T10:00:00Z\n"), Error);
}

TEST(Schedule, DropWindowsAndFirstMatchWins) {
    const auto m = compile(
        "# label,start,end,attackers,victims,dst_ports,protocol\n"
        "DROP,2018-02-28T00:00:00Z,2018-03-01T23:59:59Z,*,*\n"
        "Bot,2018-02-14T10:00:00Z,2018-02-14T12:00:00Z,10.0.0.5,*,8080,6\n"
        "Other,2018-02-14T09:00:00Z,2018-02-14T13:00:00Z,10.0.0.5,*\n");
    const auto drop = m.label(flow("2018-02-28T12:00:00Z", "1.1.1.1", 1, "2.2.2.2", 2));
    EXPECT_EQ(drop.kind, LabelOutcome::Kind::drop);
    EXPECT_EQ(m.label(flow("2018-02-14T11:00:00Z", "10.0.0.5", 999, "3.3.3.3", 8080)).label, "Bot");
    // Port and protocol predicates fail, so the later overlapping rule decides.
    EXPECT_EQ(m.label(flow("2018-02-14T11:00:00Z", "10.0.0.5", 999, "3.3.3.3", 80)).label, "Other");
    EXPECT_EQ(m.label(flow("2018-02-14T11:00:00Z", "10.0.0.5", 999, "3.3.3.3", 8080, 17)).label, "Other");
    EXPECT_EQ(*m.label(flow("2018-02-14T11:00:00Z", "10.0.0.5", 999, "3.3.3.3", 8080)).rule, 1u);
}

TEST(Schedule, LabelingIsPureInFlowOrder) {
    const auto m = compile("A,2018-02-14T10:00:00Z,2018-02-14T10:10:00Z,10.0.0.1,*\n"
                           "B,2018-02-14T10:05:00Z,2018-02-14T10:20:00Z,*,10.0.0.9\n");
    std::vector<FlowEndpoints> flows;
    for (int i = 0; i < 40; ++i) {
        const std::string t = "2018-02-14T10:" + std::string(i / 2 < 10 ? "0" : "") + std::to_string(i / 2) + ":00Z";
        flows.push_back(flow(t.c_str(), i % 3 ? "10.0.0.1" : "10.0.0.2", 1, i % 4 ? "10.0.0.9" : "10.0.0.8", 2));
    }
    std::vector<std::string> forward, backward;
    for (const auto& f : flows) forward.push_back(m.label(f).label);
    for (auto it = flows.rbegin(); it != flows.rend(); ++it) backward.push_back(m.label(*it).label);
    std::reverse(backward.begin(), backward.end());
    EXPECT_EQ(forward, backward);
}

TEST(Schedule, ClassCountReportLayout) {
    const std::string r = class_count_report({{"Bot", 3}, {"Benign", 10}, {"DoS Hulk", 2}}, "synthetic");
    EXPECT_EQ(r, "Class,synthetic\nBenign,10\nBot,3\nDoS Hulk,2\nTotal,15\n");
}
