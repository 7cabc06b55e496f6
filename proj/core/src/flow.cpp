#include "nidsgen/flow.hpp"

#include <algorithm>
#include <cmath>

#include "nidsgen/parallel.hpp"
#include "nidsgen/rng.hpp"

namespace nidsgen {

std::string FlowKey::to_string() const {
    return lo.ip.to_string() + ":" + std::to_string(lo.port) + "-" + hi.ip.to_string() + ":" +
           std::to_string(hi.port) + "-" + std::to_string(ip_protocol);
}

FlowKey canonical_key(const PacketRecord& pkt) {
    FlowKey k;
    k.ip_protocol = pkt.ip_protocol;
    if (pkt.src <= pkt.dst) {
        k.lo = pkt.src;
        k.hi = pkt.dst;
    } else {
        k.lo = pkt.dst;
        k.hi = pkt.src;
    }
    return k;
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix_endpoint = [&h](const Endpoint& e) {
        h = mix64(h ^ static_cast<std::uint64_t>(e.ip.family));
        for (std::size_t i = 0; i < 16; i += 8) {
            std::uint64_t w = 0;
            for (std::size_t j = 0; j < 8; ++j) w = (w << 8) | e.ip.bytes[i + j];
            h = mix64(h ^ w);
        }
        h = mix64(h ^ e.port);
    };
    mix_endpoint(k.lo);
    mix_endpoint(k.hi);
    return static_cast<std::size_t>(mix64(h ^ k.ip_protocol));
}

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::fin: return "fin";
        case Termination::rst: return "rst";
        case Termination::idle_timeout: return "idle_timeout";
        case Termination::hard_timeout: return "hard_timeout";
        case Termination::end_of_capture: return "end_of_capture";
    }
    return "unknown";
}

namespace {

std::int64_t seconds_to_ns(double s) { return static_cast<std::int64_t>(std::llround(s * 1e9)); }

bool is_pure_ack(const PacketRecord& p) {
    const auto f = p.tcp_flags;
    return f.ack() && !f.syn() && !f.fin() && !f.rst() && p.payload_len == 0;
}

}  // namespace

FlowTable::FlowTable(FlowConfig cfg)
    : cfg_(cfg),
      idle_ns_(seconds_to_ns(cfg.idle_timeout_s)),
      tolerance_ns_(seconds_to_ns(cfg.reorder_tolerance_s)) {
    if (cfg.hard_timeout_s) hard_ns_ = seconds_to_ns(*cfg.hard_timeout_s);
}

FlowState FlowTable::start_flow(const PacketRecord& pkt, const FlowKey& key, std::int64_t ts_ns,
                                std::uint64_t stream_index) const {
    FlowState f;
    f.key = key;
    f.initiator = pkt.src;
    f.responder = pkt.dst;
    f.first_ts_ns = ts_ns;
    f.last_ts_ns = ts_ns;
    f.first_packet_index = stream_index;
    return f;
}

void FlowTable::append(FlowState& flow, const PacketRecord& pkt, std::int64_t ts_ns) {
    FlowPacket fp;
    fp.ts_ns = ts_ns;
    fp.forward = pkt.src == flow.initiator;
    fp.total_len = pkt.total_len;
    fp.payload_len = pkt.payload_len;
    fp.header_len = pkt.header_len;
    fp.flags = pkt.tcp_flags;
    fp.window = pkt.tcp_window;
    flow.packets.push_back(fp);
    flow.last_ts_ns = std::max(flow.last_ts_ns, ts_ns);
}

std::vector<FlowState> FlowTable::ingest(const PacketRecord& pkt) { return ingest(pkt, ingested_); }

std::vector<FlowState> FlowTable::ingest(const PacketRecord& pkt, std::uint64_t stream_index) {
    std::vector<FlowState> emitted;
    const FlowKey key = canonical_key(pkt);
    std::int64_t ts = pkt.ts_ns;

    auto it = live_.find(key);
    if (it != live_.end()) {
        FlowState& flow = it->second;
        if (ts < flow.last_ts_ns - tolerance_ns_) {
            ++clamped_;
            ts = flow.last_ts_ns;
        }
        Termination reason{};
        bool close_before = false;
        if (ts - flow.last_ts_ns > idle_ns_) {
            close_before = true;
            reason = Termination::idle_timeout;
        } else if (hard_ns_ && ts - flow.first_ts_ns > *hard_ns_) {
            close_before = true;
            reason = Termination::hard_timeout;
        } else if (key.ip_protocol == kProtoTcp && flow.fin_seen[0] && flow.fin_seen[1] && pkt.tcp_flags.syn() &&
                   !pkt.tcp_flags.ack()) {
            close_before = true;
            reason = Termination::fin;
        }
        if (close_before) {
            flow.terminated_by = reason;
            emitted.push_back(std::move(flow));
            live_.erase(it);
            it = live_.end();
        }
    }
    if (it == live_.end()) {
        it = live_.emplace(key, start_flow(pkt, key, ts, stream_index)).first;
    }

    FlowState& flow = it->second;
    const bool both_fin_before = flow.fin_seen[0] && flow.fin_seen[1];
    append(flow, pkt, ts);
    ++ingested_;

    if (key.ip_protocol == kProtoTcp) {
        const bool forward = flow.packets.back().forward;
        std::optional<Termination> close;
        if (pkt.tcp_flags.rst()) {
            close = Termination::rst;
        } else {
            if (pkt.tcp_flags.fin()) flow.fin_seen[forward ? 0 : 1] = true;
            if (both_fin_before && (is_pure_ack(pkt) || pkt.tcp_flags.fin())) close = Termination::fin;
        }
        if (close) {
            flow.terminated_by = *close;
            emitted.push_back(std::move(flow));
            live_.erase(it);
        }
    }
    return emitted;
}

bool flow_order_less(const FlowState& a, const FlowState& b) {
    if (a.first_ts_ns != b.first_ts_ns) return a.first_ts_ns < b.first_ts_ns;
    if (a.key != b.key) return a.key < b.key;
    return a.first_packet_index < b.first_packet_index;
}

std::vector<FlowState> FlowTable::flush() {
    std::vector<FlowState> out;
    out.reserve(live_.size());
    for (auto& [key, flow] : live_) {
        flow.terminated_by = Termination::end_of_capture;
        out.push_back(std::move(flow));
    }
    live_.clear();
    std::sort(out.begin(), out.end(), flow_order_less);
    return out;
}

std::vector<FlowState> assemble_flows(std::span<const PacketRecord> packets, const FlowConfig& cfg,
                                      std::size_t jobs) {
    jobs = std::max<std::size_t>(1, jobs);
    std::vector<std::vector<FlowState>> shard_out(jobs);
    FlowKeyHash hasher;
    parallel_for(jobs, jobs, [&](std::size_t shard) {
        FlowTable table(cfg);
        auto& out = shard_out[shard];
        for (std::size_t i = 0; i < packets.size(); ++i) {
            const auto& pkt = packets[i];
            if (jobs > 1 && hasher(canonical_key(pkt)) % jobs != shard) continue;
            auto emitted = table.ingest(pkt, i);
            for (auto& f : emitted) out.push_back(std::move(f));
        }
        for (auto& f : table.flush()) out.push_back(std::move(f));
    });
    std::vector<FlowState> all;
    for (auto& s : shard_out) {
        for (auto& f : s) all.push_back(std::move(f));
    }
    std::sort(all.begin(), all.end(), flow_order_less);
    return all;
}

}  // namespace nidsgen
