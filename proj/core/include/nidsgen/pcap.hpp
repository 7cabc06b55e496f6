#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "nidsgen/net.hpp"

namespace nidsgen {

// Classic libpcap file format. pcapng is not supported.

inline constexpr std::uint32_t kPcapMagicMicro = 0xA1B2C3D4;
inline constexpr std::uint32_t kPcapMagicNano = 0xA1B23C4D;
inline constexpr std::size_t kPcapGlobalHeaderLen = 24;
inline constexpr std::size_t kPcapRecordHeaderLen = 16;

inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::uint32_t kLinkRaw = 101;
inline constexpr std::uint32_t kLinkLinuxSll = 113;

/// Byte order of the file relative to the host.
enum class ByteOrder { native, swapped };
enum class TimestampUnit { microsecond, nanosecond };

struct CaptureHeader {
    ByteOrder byte_order = ByteOrder::native;
    TimestampUnit timestamp_unit = TimestampUnit::microsecond;
    std::uint16_t version_major = 2;
    std::uint16_t version_minor = 4;
    std::uint32_t snap_len = 65535;
    std::uint32_t link_type = kLinkEthernet;
};

/// Parses the 24-byte global header. Throws UnknownMagic / TruncatedHeader.
CaptureHeader parse_capture_header(std::span<const std::uint8_t> bytes);

struct RawFrame {
    std::int64_t ts_ns = 0;
    std::uint32_t orig_len = 0;
    std::vector<std::uint8_t> data;
};

/// Sequential reader over one capture file. A record cut short by end of file
/// ends iteration and is counted in truncated_records().
class CaptureReader {
public:
    static CaptureReader open(const std::filesystem::path& path);
    explicit CaptureReader(std::unique_ptr<std::istream> in);

    const CaptureHeader& header() const noexcept { return header_; }
    std::optional<RawFrame> next();
    std::uint64_t truncated_records() const noexcept { return truncated_; }

private:
    std::unique_ptr<std::istream> in_;
    CaptureHeader header_;
    std::uint64_t truncated_ = 0;
    bool done_ = false;
};

struct TcpFlags {
    static constexpr std::uint8_t kFin = 0x01;
    static constexpr std::uint8_t kSyn = 0x02;
    static constexpr std::uint8_t kRst = 0x04;
    static constexpr std::uint8_t kPsh = 0x08;
    static constexpr std::uint8_t kAck = 0x10;
    static constexpr std::uint8_t kUrg = 0x20;
    static constexpr std::uint8_t kEce = 0x40;
    static constexpr std::uint8_t kCwr = 0x80;

    std::uint8_t bits = 0;

    bool fin() const noexcept { return bits & kFin; }
    bool syn() const noexcept { return bits & kSyn; }
    bool rst() const noexcept { return bits & kRst; }
    bool psh() const noexcept { return bits & kPsh; }
    bool ack() const noexcept { return bits & kAck; }
    bool urg() const noexcept { return bits & kUrg; }
    bool ece() const noexcept { return bits & kEce; }
    bool cwr() const noexcept { return bits & kCwr; }

    bool operator==(const TcpFlags&) const = default;
};

inline constexpr std::uint8_t kProtoIcmp = 1;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;
inline constexpr std::uint8_t kProtoIcmpV6 = 58;

/// One decoded IP packet. Sizes are on-wire: total_len comes from the IP
/// header even when the capture snapped the frame.
struct PacketRecord {
    std::int64_t ts_ns = 0;
    Endpoint src;
    Endpoint dst;
    std::uint8_t ip_protocol = 0;
    std::uint32_t total_len = 0;
    std::uint32_t payload_len = 0;
    /// IP header (including IPv6 extension headers) plus TCP/UDP header.
    std::uint32_t header_len = 0;
    TcpFlags tcp_flags;
    std::uint16_t tcp_window = 0;

    bool operator==(const PacketRecord&) const = default;
};

enum class SkipReason : std::uint8_t { non_ip, malformed, fragment, unsupported_link };
inline constexpr std::size_t kSkipReasonCount = 4;
std::string_view to_string(SkipReason r) noexcept;

using DecodeResult = std::variant<PacketRecord, SkipReason>;

/// Classifies a captured frame. Never throws; anything it cannot use becomes a Skip.
/// The transport is chosen by the IP protocol field alone.
DecodeResult decode_frame(std::span<const std::uint8_t> raw, std::uint32_t link_type, std::int64_t ts_ns);

struct DecodeStats {
    std::uint64_t frames = 0;
    std::uint64_t decoded = 0;
    std::array<std::uint64_t, kSkipReasonCount> skipped{};
    std::uint64_t truncated_records = 0;
    std::uint64_t total_len_sum = 0;

    std::uint64_t skipped_total() const noexcept;
};

struct DecodedCapture {
    CaptureHeader header;
    std::vector<PacketRecord> packets;
    DecodeStats stats;
};

/// Reads and decodes an entire capture file.
DecodedCapture read_capture(const std::filesystem::path& path);

/// Writes classic pcap files. Used by the synthetic corpus generator and tests.
class CaptureWriter {
public:
    CaptureWriter(const std::filesystem::path& path, CaptureHeader header);
    explicit CaptureWriter(std::unique_ptr<std::ostream> out, CaptureHeader header);

    /// orig_len defaults to the captured length. Data beyond snap_len is cut.
    void write(std::int64_t ts_ns, std::span<const std::uint8_t> frame, std::optional<std::uint32_t> orig_len = {});
    void flush();

private:
    void put32(std::uint32_t v);
    void put16(std::uint16_t v);

    std::unique_ptr<std::ostream> out_;
    CaptureHeader header_;
};

}  // namespace nidsgen
