#include <gtest/gtest.h>

#include "../support/flow_compare.hpp"
#include "../support/scenarios.hpp"
#include "nidsgen/flow.hpp"

using namespace nidsgen;

namespace {

constexpr std::int64_t kSec = 1'000'000'000LL;

const Endpoint kClient{IpAddress::v4(10, 0, 0, 1), 40000};
const Endpoint kServer{IpAddress::v4(10, 0, 1, 1), 80};

PacketRecord pkt(std::int64_t ts, bool from_client, std::uint8_t flags, std::uint32_t payload = 0,
                 std::uint8_t proto = kProtoTcp) {
    PacketRecord p;
    p.ts_ns = ts;
    p.src = from_client ? kClient : kServer;
    p.dst = from_client ? kServer : kClient;
    p.ip_protocol = proto;
    p.header_len = proto == kProtoTcp ? 40 : 28;
    p.payload_len = payload;
    p.total_len = p.header_len + payload;
    p.tcp_flags.bits = proto == kProtoTcp ? flags : 0;
    return p;
}

std::vector<FlowState> run(const std::vector<PacketRecord>& pkts, FlowConfig cfg = {}) {
    return assemble_flows(pkts, cfg, 1);
}

using F = TcpFlags;

}  // namespace

TEST(FlowKey, CanonicalAndDirectionFree) {
    const auto a = pkt(0, true, F::kSyn);
    const auto b = pkt(0, false, F::kSyn | F::kAck);
    EXPECT_EQ(canonical_key(a), canonical_key(b));
    EXPECT_LE(canonical_key(a).lo, canonical_key(a).hi);
    EXPECT_EQ(FlowKeyHash{}(canonical_key(a)), FlowKeyHash{}(canonical_key(b)));
}

TEST(FlowAssembly, FinHandshakeIsOneFlowIncludingFinalAck) {
    std::vector<PacketRecord> p = {
        pkt(0, true, F::kSyn),
        pkt(1000, false, F::kSyn | F::kAck),
        pkt(2000, true, F::kAck),
        pkt(3000, true, F::kPsh | F::kAck, 100),
        pkt(4000, false, F::kFin | F::kAck),
        pkt(5000, true, F::kFin | F::kAck),
        pkt(6000, false, F::kAck),
    };
    const auto flows = run(p);
    ASSERT_EQ(flows.size(), 1u);
    EXPECT_EQ(flows[0].packets.size(), 7u);
    EXPECT_EQ(flows[0].terminated_by, Termination::fin);
    EXPECT_EQ(flows[0].initiator, kClient);
    EXPECT_TRUE(flows[0].packets[0].forward);
    EXPECT_FALSE(flows[0].packets[1].forward);
}

TEST(FlowAssembly, PacketsAfterFinCloseStartNewFlow) {
    std::vector<PacketRecord> p = {
        pkt(0, true, F::kSyn),        pkt(1000, true, F::kFin | F::kAck), pkt(2000, false, F::kFin | F::kAck),
        pkt(3000, true, F::kAck),     pkt(4000, true, F::kSyn),
    };
    const auto flows = run(p);
    ASSERT_EQ(flows.size(), 2u);
    EXPECT_EQ(flows[0].packets.size(), 4u);
    EXPECT_EQ(flows[1].packets.size(), 1u);
    EXPECT_EQ(flows[1].terminated_by, Termination::end_of_capture);
}

TEST(FlowAssembly, SynAfterBothFinsClosesWithoutTheSyn) {
    std::vector<PacketRecord> p = {
        pkt(0, true, F::kSyn),
        pkt(1000, true, F::kFin | F::kAck),
        pkt(2000, false, F::kFin | F::kAck, 5),  // carries payload: not a pure ACK
        pkt(3000, true, F::kSyn),
    };
    const auto flows = run(p);
    ASSERT_EQ(flows.size(), 2u);
    EXPECT_EQ(flows[0].packets.size(), 3u);
    EXPECT_EQ(flows[0].terminated_by, Termination::fin);
}

TEST(FlowAssembly, RstClosesAndBelongsToFlow) {
    std::vector<PacketRecord> p = {pkt(0, true, F::kSyn), pkt(1000, false, F::kRst), pkt(2000, true, F::kAck)};
    const auto flows = run(p);
    ASSERT_EQ(flows.size(), 2u);
    EXPECT_EQ(flows[0].packets.size(), 2u);
    EXPECT_EQ(flows[0].terminated_by, Termination::rst);
    // The straggler starts a new flow whose initiator is its sender.
    EXPECT_EQ(flows[1].initiator, kClient);
}

TEST(FlowAssembly, UdpIdleGapSplits) {
    std::vector<PacketRecord> p = {pkt(0, true, 0, 40, kProtoUdp), pkt(200 * kSec, true, 0, 40, kProtoUdp)};
    const auto flows = run(p);
    ASSERT_EQ(flows.size(), 2u);
    EXPECT_EQ(flows[0].terminated_by, Termination::idle_timeout);
    EXPECT_EQ(flows[1].terminated_by, Termination::end_of_capture);
}

TEST(FlowAssembly, GapEqualToTimeoutDoesNotSplit) {
    std::vector<PacketRecord> p = {pkt(0, true, 0, 40, kProtoUdp), pkt(120 * kSec, true, 0, 40, kProtoUdp)};
    EXPECT_EQ(run(p).size(), 1u);
}

TEST(FlowAssembly, HardTimeout) {
    std::vector<PacketRecord> p;
    for (int i = 0; i < 10; ++i) p.push_back(pkt(i * 10 * kSec, true, 0, 40, kProtoUdp));
    FlowConfig cfg;
    cfg.hard_timeout_s = 35;
    const auto flows = run(p, cfg);
    ASSERT_EQ(flows.size(), 3u);
    EXPECT_EQ(flows[0].packets.size(), 4u);
    EXPECT_EQ(flows[0].terminated_by, Termination::hard_timeout);
}

TEST(FlowAssembly, LargeRegressionIsClampedSmallKept) {
    std::vector<PacketRecord> p = {pkt(10 * kSec, true, F::kSyn), pkt(10 * kSec - 500'000, false, F::kAck),
                                   pkt(9 * kSec, true, F::kAck)};
    FlowTable t;
    std::vector<FlowState> out;
    for (const auto& x : p) t.ingest(x);
    out = t.flush();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(t.clamped_regressions(), 1u);
    EXPECT_EQ(out[0].packets[1].ts_ns, 10 * kSec - 500'000);
    EXPECT_EQ(out[0].packets[2].ts_ns, 10 * kSec);
    EXPECT_GE(out[0].last_ts_ns, out[0].first_ts_ns);
}

TEST(FlowAssembly, FlushOrdersByFirstTimestampThenKey) {
    std::vector<PacketRecord> p = {pkt(5, true, 0, 1, kProtoUdp), pkt(1, true, F::kSyn)};
    const auto flows = run(p);
    ASSERT_EQ(flows.size(), 2u);
    EXPECT_EQ(flows[0].first_ts_ns, 1);
    for (const auto& f : flows) EXPECT_EQ(f.terminated_by, Termination::end_of_capture);
}

TEST(FlowAssembly, EmptyInputGivesNoFlows) { EXPECT_TRUE(run({}).empty()); }

TEST(FlowAssembly, MatchesReferenceOnRandomCaptures) {
    const auto dir = testsupport::scratch_dir("flow-oracle");
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        auto sc = testsupport::random_scenario(seed);
        const auto path = dir / ("s" + std::to_string(seed) + ".pcap");
        sc.script.write(path);
        const auto cmp = testsupport::compare_with_oracle(path, sc.hard_timeout_s);
        EXPECT_TRUE(cmp.mismatches.empty()) << "seed " << seed << ": " << cmp.mismatches.front();
        EXPECT_GT(cmp.flows, 0u);
    }
}

TEST(FlowAssembly, ShardedRunEqualsSingleTable) {
    const auto dir = testsupport::scratch_dir("flow-shards");
    for (std::uint64_t seed = 200; seed < 205; ++seed) {
        auto sc = testsupport::random_scenario(seed);
        const auto path = dir / "s.pcap";
        sc.script.write(path);
        const auto cap = read_capture(path);
        FlowConfig cfg;
        cfg.hard_timeout_s = sc.hard_timeout_s;
        const auto one = assemble_flows(cap.packets, cfg, 1);
        const auto four = assemble_flows(cap.packets, cfg, 4);
        ASSERT_EQ(one.size(), four.size());
        for (std::size_t i = 0; i < one.size(); ++i) {
            EXPECT_EQ(one[i].key, four[i].key);
            EXPECT_EQ(one[i].first_packet_index, four[i].first_packet_index);
            EXPECT_EQ(one[i].packets.size(), four[i].packets.size());
            EXPECT_EQ(one[i].terminated_by, four[i].terminated_by);
        }
    }
}

TEST(FlowAssembly, DirectionFollowsInitiator) {
    const auto dir = testsupport::scratch_dir("flow-direction");
    auto sc = testsupport::random_scenario(300);
    sc.script.write(dir / "s.pcap");
    const auto cap = read_capture(dir / "s.pcap");
    for (const auto& f : assemble_flows(cap.packets, {}, 1)) {
        ASSERT_FALSE(f.packets.empty());
        EXPECT_TRUE(f.packets.front().forward);
        PacketRecord first;
        first.src = f.initiator;
        first.dst = f.responder;
        first.ip_protocol = f.key.ip_protocol;
        EXPECT_EQ(canonical_key(first), f.key);
    }
}
