#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nidsgen/net.hpp"
#include "nidsgen/pcap.hpp"

namespace nidsgen {

/// Direction-insensitive 5-tuple. lo <= hi under (ip bytes, port) ordering.
struct FlowKey {
    Endpoint lo;
    Endpoint hi;
    std::uint8_t ip_protocol = 0;

    auto operator<=>(const FlowKey&) const = default;
    bool operator==(const FlowKey&) const = default;

    std::string to_string() const;
};

FlowKey canonical_key(const PacketRecord& pkt);

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const noexcept;
};

enum class Termination : std::uint8_t { fin, rst, idle_timeout, hard_timeout, end_of_capture };
std::string_view to_string(Termination t) noexcept;

/// Per-packet data retained by a flow; everything finalize() needs.
struct FlowPacket {
    std::int64_t ts_ns = 0;
    bool forward = true;
    std::uint32_t total_len = 0;
    std::uint32_t payload_len = 0;
    std::uint32_t header_len = 0;
    TcpFlags flags;
    std::uint16_t window = 0;
};

struct FlowState {
    FlowKey key;
    /// Source of the first packet; forward direction for the whole flow.
    Endpoint initiator;
    Endpoint responder;
    std::int64_t first_ts_ns = 0;
    std::int64_t last_ts_ns = 0;
    std::vector<FlowPacket> packets;
    std::array<bool, 2> fin_seen{};  // [forward, backward]
    Termination terminated_by = Termination::end_of_capture;
    /// Index of the flow's first packet in the ingested stream. Breaks
    /// (first_ts, key) ties when ordering emitted flows.
    std::uint64_t first_packet_index = 0;

    double duration_seconds() const noexcept { return static_cast<double>(last_ts_ns - first_ts_ns) * 1e-9; }
};

struct FlowConfig {
    double idle_timeout_s = 120.0;
    std::optional<double> hard_timeout_s;
    /// Timestamp regressions up to this much are kept as-is; larger ones are
    /// clamped to the flow's last timestamp and counted.
    double reorder_tolerance_s = 0.001;
};

/// Live-flow table for one capture. Packets must be fed in file order.
///
/// Termination rules:
///  - RST closes the flow; the RST packet belongs to it.
///  - Once FIN has been seen in both directions, the next pure ACK (or a
///    repeated FIN) closes the flow and belongs to it. A SYN arriving in
///    that state closes the old flow and starts a new one.
///  - A gap above idle_timeout closes the old flow; the packet starts a new one.
///  - Flow age above hard_timeout (if set) does the same.
class FlowTable {
public:
    explicit FlowTable(FlowConfig cfg = {});

    std::vector<FlowState> ingest(const PacketRecord& pkt);
    /// As ingest(), recording `stream_index` as the packet's position in the
    /// original capture (used when a table sees only a shard of it).
    std::vector<FlowState> ingest(const PacketRecord& pkt, std::uint64_t stream_index);
    /// Emits every live flow ordered by (first_ts, key), marked end_of_capture.
    std::vector<FlowState> flush();

    std::size_t live_count() const noexcept { return live_.size(); }
    std::uint64_t clamped_regressions() const noexcept { return clamped_; }
    std::uint64_t ingested() const noexcept { return ingested_; }

private:
    FlowState start_flow(const PacketRecord& pkt, const FlowKey& key, std::int64_t ts_ns,
                         std::uint64_t stream_index) const;
    static void append(FlowState& flow, const PacketRecord& pkt, std::int64_t ts_ns);

    FlowConfig cfg_;
    std::int64_t idle_ns_;
    std::optional<std::int64_t> hard_ns_;
    std::int64_t tolerance_ns_;
    std::unordered_map<FlowKey, FlowState, FlowKeyHash> live_;
    std::uint64_t clamped_ = 0;
    std::uint64_t ingested_ = 0;
};

/// Deterministic ordering for emitted flows: (first_ts, key, first_packet_index).
bool flow_order_less(const FlowState& a, const FlowState& b);

/// Assembles all flows of one capture. With jobs > 1 the key space is
/// sharded by hash, one table per shard; the result is identical to the
/// single-table run and sorted by flow_order_less.
std::vector<FlowState> assemble_flows(std::span<const PacketRecord> packets, const FlowConfig& cfg,
                                      std::size_t jobs = 1);

}  // namespace nidsgen
