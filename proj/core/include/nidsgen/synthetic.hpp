#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nidsgen/dataset.hpp"
#include "nidsgen/frame_builder.hpp"

namespace nidsgen {

struct ScriptedPacket {
    std::int64_t ts_ns = 0;
    FrameSpec spec;
};

enum class SessionClose { fin, rst, none };

struct TcpSessionShape {
    std::size_t requests = 1;
    std::uint32_t request_len = 100;
    std::uint32_t response_len = 500;
    std::int64_t rtt_ns = 1'000'000;
    std::int64_t think_ns = 10'000'000;
    std::uint16_t client_window = 8192;
    std::uint16_t server_window = 65535;
    SessionClose close = SessionClose::fin;
    /// Silence before the close, e.g. to cross an idle timeout.
    std::int64_t idle_before_close_ns = 0;
};

/// Accumulates packets of hand-shaped conversations and writes them as a
/// capture in timestamp order (stable for equal timestamps).
class TrafficScript {
public:
    void add(std::int64_t ts_ns, const FrameSpec& spec) { packets_.push_back({ts_ns, spec}); }
    /// Returns the timestamp of the session's last packet.
    std::int64_t tcp_session(std::int64_t start_ns, Endpoint client, Endpoint server, const TcpSessionShape& shape);
    std::int64_t udp_exchange(std::int64_t start_ns, Endpoint client, Endpoint server, std::size_t requests,
                              std::uint32_t request_len, std::uint32_t response_len, std::int64_t gap_ns);
    std::int64_t icmp_echo(std::int64_t start_ns, const IpAddress& a, const IpAddress& b, std::size_t count,
                           std::int64_t interval_ns, std::uint32_t payload_len);

    std::vector<ScriptedPacket> sorted() const;
    std::size_t size() const noexcept { return packets_.size(); }
    /// Classic pcap, nanosecond timestamps, Ethernet.
    void write(std::ostream& out) const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<ScriptedPacket> packets_;
};

struct CorpusConfig {
    std::uint64_t seed = 1;
    std::size_t packets = 5000;
    /// 2018-02-14T10:00:00Z
    std::int64_t start_ns = 1518602400LL * 1'000'000'000LL;
    double duration_s = 600;
};

/// Labelled synthetic traffic day: benign web/DNS/ICMP traffic plus DoS Hulk,
/// SSH-Patator and Bot episodes, with the matching attack schedule.
struct Corpus {
    std::vector<ScriptedPacket> packets;  // exactly cfg.packets, time-ordered
    std::string schedule_csv;
};

Corpus generate_corpus(const CorpusConfig& cfg);
void write_capture(std::span<const ScriptedPacket> packets, std::ostream& out);

struct ShiftedPairConfig {
    std::uint64_t seed = 1;
    std::size_t features = 6;
    std::size_t benign = 2000;
    std::vector<std::pair<std::string, std::size_t>> attacks{{"DoS Hulk", 150}, {"SSH-Patator", 60}, {"Bot", 300}};
    /// Attack clusters sit `scale` times above the benign centre in the first
    /// dataset and `scale` times below it in the second.
    double scale = 4.0;
    double benign_sigma = 0.2;
    double attack_sigma = 0.1;
};

/// Two labelled tables with one benign distribution and attack clusters of
/// the same shape but very different scale.
std::pair<DatasetTable, DatasetTable> generate_shifted_pair(const ShiftedPairConfig& cfg);

}  // namespace nidsgen
