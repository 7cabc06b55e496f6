#include "nidsgen/pcap.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "nidsgen/error.hpp"

namespace nidsgen {
namespace {

constexpr std::uint32_t kMaxRecordLen = 256u * 1024u * 1024u;

std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}
std::uint16_t bswap16(std::uint16_t v) { return static_cast<std::uint16_t>((v >> 8) | (v << 8)); }

std::uint32_t load32(const std::uint8_t* p, ByteOrder order) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return order == ByteOrder::native ? v : bswap32(v);
}
std::uint16_t load16(const std::uint8_t* p, ByteOrder order) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return order == ByteOrder::native ? v : bswap16(v);
}

// Network byte order helpers for packet headers.
std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

constexpr std::uint8_t kIp6HopByHop = 0;
constexpr std::uint8_t kIp6Routing = 43;
constexpr std::uint8_t kIp6Fragment = 44;
constexpr std::uint8_t kIp6Auth = 51;
constexpr std::uint8_t kIp6DestOpts = 60;
constexpr int kMaxIp6ExtHeaders = 8;

struct IpLayer {
    Endpoint src;
    Endpoint dst;
    std::uint8_t protocol = 0;
    std::uint32_t total_len = 0;
    std::uint32_t header_len = 0;
    std::span<const std::uint8_t> transport;  // captured bytes after the IP header(s)
};

std::variant<IpLayer, SkipReason> parse_ipv4(std::span<const std::uint8_t> b) {
    if (b.size() < 20) return SkipReason::malformed;
    if ((b[0] >> 4) != 4) return SkipReason::malformed;
    const std::uint32_t ihl = (b[0] & 0x0Fu) * 4u;
    if (ihl < 20 || ihl > b.size()) return SkipReason::malformed;
    const std::uint32_t total = be16(&b[2]);
    if (total < ihl) return SkipReason::malformed;
    const std::uint16_t frag = be16(&b[6]);
    if ((frag & 0x1FFFu) != 0) return SkipReason::fragment;
    IpLayer ip;
    ip.protocol = b[9];
    ip.src.ip = IpAddress::v4(b[12], b[13], b[14], b[15]);
    ip.dst.ip = IpAddress::v4(b[16], b[17], b[18], b[19]);
    ip.total_len = total;
    ip.header_len = ihl;
    const std::size_t avail = std::min<std::size_t>(b.size(), total) - ihl;
    ip.transport = b.subspan(ihl, avail);
    return ip;
}

std::variant<IpLayer, SkipReason> parse_ipv6(std::span<const std::uint8_t> b) {
    if (b.size() < 40) return SkipReason::malformed;
    if ((b[0] >> 4) != 6) return SkipReason::malformed;
    const std::uint32_t payload_len = be16(&b[4]);
    if (payload_len == 0) return SkipReason::malformed;  // jumbograms unsupported
    IpLayer ip;
    std::array<std::uint8_t, 16> raw{};
    std::memcpy(raw.data(), &b[8], 16);
    ip.src.ip = IpAddress::v6(raw);
    std::memcpy(raw.data(), &b[24], 16);
    ip.dst.ip = IpAddress::v6(raw);
    ip.total_len = 40 + payload_len;

    std::uint8_t next = b[6];
    std::size_t offset = 40;
    int walked = 0;
    for (;;) {
        if (next != kIp6HopByHop && next != kIp6Routing && next != kIp6Fragment && next != kIp6Auth &&
            next != kIp6DestOpts) {
            break;
        }
        if (++walked > kMaxIp6ExtHeaders) return SkipReason::malformed;
        if (offset + 8 > b.size()) return SkipReason::malformed;
        std::size_t len;
        if (next == kIp6Fragment) {
            const std::uint16_t off = be16(&b[offset + 2]);
            if ((off & 0xFFF8u) != 0) return SkipReason::fragment;
            len = 8;
        } else if (next == kIp6Auth) {
            len = (static_cast<std::size_t>(b[offset + 1]) + 2) * 4;
        } else {
            len = (static_cast<std::size_t>(b[offset + 1]) + 1) * 8;
        }
        next = b[offset];
        offset += len;
        if (offset > b.size() || offset > ip.total_len) return SkipReason::malformed;
    }
    ip.protocol = next;
    ip.header_len = static_cast<std::uint32_t>(offset);
    const std::size_t end = std::min<std::size_t>(b.size(), ip.total_len);
    ip.transport = b.subspan(offset, end - offset);
    return ip;
}

}  // namespace

std::string_view to_string(SkipReason r) noexcept {
    switch (r) {
        case SkipReason::non_ip: return "non_ip";
        case SkipReason::malformed: return "malformed";
        case SkipReason::fragment: return "fragment";
        case SkipReason::unsupported_link: return "unsupported_link";
    }
    return "unknown";
}

std::uint64_t DecodeStats::skipped_total() const noexcept {
    std::uint64_t s = 0;
    for (auto v : skipped) s += v;
    return s;
}

CaptureHeader parse_capture_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kPcapGlobalHeaderLen) {
        throw Error(ErrorCode::truncated_header,
                    "capture has " + std::to_string(bytes.size()) + " bytes, global header needs 24");
    }
    std::uint32_t magic;
    std::memcpy(&magic, bytes.data(), 4);
    CaptureHeader h;
    if (magic == kPcapMagicMicro || magic == kPcapMagicNano) {
        h.byte_order = ByteOrder::native;
    } else if (bswap32(magic) == kPcapMagicMicro || bswap32(magic) == kPcapMagicNano) {
        h.byte_order = ByteOrder::swapped;
        magic = bswap32(magic);
    } else {
        std::ostringstream os;
        os << "0x" << std::hex << magic << " is not a classic pcap magic";
        throw Error(ErrorCode::unknown_magic, os.str());
    }
    h.timestamp_unit = magic == kPcapMagicNano ? TimestampUnit::nanosecond : TimestampUnit::microsecond;
    h.version_major = load16(bytes.data() + 4, h.byte_order);
    h.version_minor = load16(bytes.data() + 6, h.byte_order);
    h.snap_len = load32(bytes.data() + 16, h.byte_order);
    // Some writers leave snap_len at 0; treat it as unlimited.
    if (h.snap_len == 0) h.snap_len = kMaxRecordLen;
    h.link_type = load32(bytes.data() + 20, h.byte_order) & 0x0FFFFFFFu;
    return h;
}

CaptureReader CaptureReader::open(const std::filesystem::path& path) {
    auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*in) throw Error(ErrorCode::io_error, "cannot open capture " + path.string());
    return CaptureReader(std::move(in));
}

CaptureReader::CaptureReader(std::unique_ptr<std::istream> in) : in_(std::move(in)) {
    std::array<std::uint8_t, kPcapGlobalHeaderLen> buf{};
    in_->read(reinterpret_cast<char*>(buf.data()), buf.size());
    header_ = parse_capture_header(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(in_->gcount())));
}

std::optional<RawFrame> CaptureReader::next() {
    if (done_) return std::nullopt;
    std::array<std::uint8_t, kPcapRecordHeaderLen> rec{};
    in_->read(reinterpret_cast<char*>(rec.data()), rec.size());
    const auto got = static_cast<std::size_t>(in_->gcount());
    if (got == 0) {
        done_ = true;
        return std::nullopt;
    }
    if (got < rec.size()) {
        ++truncated_;
        done_ = true;
        return std::nullopt;
    }
    const auto order = header_.byte_order;
    const std::int64_t sec = load32(rec.data(), order);
    const std::int64_t frac = load32(rec.data() + 4, order);
    const std::uint32_t caplen = load32(rec.data() + 8, order);
    RawFrame frame;
    frame.orig_len = load32(rec.data() + 12, order);
    frame.ts_ns = sec * 1'000'000'000 + (header_.timestamp_unit == TimestampUnit::nanosecond ? frac : frac * 1000);
    if (caplen > kMaxRecordLen) {
        ++truncated_;
        done_ = true;
        return std::nullopt;
    }
    frame.data.resize(caplen);
    in_->read(reinterpret_cast<char*>(frame.data.data()), caplen);
    if (static_cast<std::size_t>(in_->gcount()) < caplen) {
        ++truncated_;
        done_ = true;
        return std::nullopt;
    }
    return frame;
}

DecodeResult decode_frame(std::span<const std::uint8_t> raw, std::uint32_t link_type, std::int64_t ts_ns) {
    std::span<const std::uint8_t> l3;
    int version_hint = 0;  // 4, 6, or 0 = read from the IP header
    switch (link_type) {
        case kLinkEthernet: {
            if (raw.size() < 14) return SkipReason::malformed;
            std::size_t off = 12;
            std::uint16_t ethertype = be16(&raw[off]);
            for (int tags = 0; (ethertype == 0x8100 || ethertype == 0x88A8) && tags < 2; ++tags) {
                off += 4;
                if (off + 2 > raw.size()) return SkipReason::malformed;
                ethertype = be16(&raw[off]);
            }
            if (ethertype == 0x0800) {
                version_hint = 4;
            } else if (ethertype == 0x86DD) {
                version_hint = 6;
            } else {
                return SkipReason::non_ip;
            }
            l3 = raw.subspan(off + 2);
            break;
        }
        case kLinkLinuxSll: {
            if (raw.size() < 16) return SkipReason::malformed;
            const std::uint16_t proto = be16(&raw[14]);
            if (proto == 0x0800) {
                version_hint = 4;
            } else if (proto == 0x86DD) {
                version_hint = 6;
            } else {
                return SkipReason::non_ip;
            }
            l3 = raw.subspan(16);
            break;
        }
        case kLinkRaw:
        case 12:  // LINKTYPE_RAW on some BSDs
            l3 = raw;
            break;
        default:
            return SkipReason::unsupported_link;
    }
    if (l3.empty()) return SkipReason::malformed;
    if (version_hint == 0) {
        version_hint = l3[0] >> 4;
        if (version_hint != 4 && version_hint != 6) return SkipReason::non_ip;
    }

    auto parsed = version_hint == 4 ? parse_ipv4(l3) : parse_ipv6(l3);
    if (auto* skip = std::get_if<SkipReason>(&parsed)) return *skip;
    const IpLayer& ip = std::get<IpLayer>(parsed);

    PacketRecord pkt;
    pkt.ts_ns = ts_ns;
    pkt.src = ip.src;
    pkt.dst = ip.dst;
    pkt.ip_protocol = ip.protocol;
    pkt.total_len = ip.total_len;
    const auto t = ip.transport;
    std::uint32_t transport_hdr = 0;
    if (ip.protocol == kProtoTcp) {
        if (t.size() < 20) return SkipReason::malformed;
        transport_hdr = (t[12] >> 4) * 4u;
        if (transport_hdr < 20 || transport_hdr > t.size()) return SkipReason::malformed;
        pkt.src.port = be16(&t[0]);
        pkt.dst.port = be16(&t[2]);
        pkt.tcp_flags.bits = t[13];
        pkt.tcp_window = be16(&t[14]);
    } else if (ip.protocol == kProtoUdp) {
        if (t.size() < 8) return SkipReason::malformed;
        transport_hdr = 8;
        pkt.src.port = be16(&t[0]);
        pkt.dst.port = be16(&t[2]);
    }
    const std::uint32_t hdr = ip.header_len + transport_hdr;
    if (hdr > ip.total_len) return SkipReason::malformed;
    pkt.header_len = hdr;
    pkt.payload_len = ip.total_len - hdr;
    return pkt;
}

DecodedCapture read_capture(const std::filesystem::path& path) {
    auto reader = CaptureReader::open(path);
    DecodedCapture out;
    out.header = reader.header();
    while (auto frame = reader.next()) {
        ++out.stats.frames;
        auto result = decode_frame(frame->data, out.header.link_type, frame->ts_ns);
        if (auto* pkt = std::get_if<PacketRecord>(&result)) {
            ++out.stats.decoded;
            out.stats.total_len_sum += pkt->total_len;
            out.packets.push_back(*pkt);
        } else {
            ++out.stats.skipped[static_cast<std::size_t>(std::get<SkipReason>(result))];
        }
    }
    out.stats.truncated_records = reader.truncated_records();
    return out;
}

CaptureWriter::CaptureWriter(const std::filesystem::path& path, CaptureHeader header)
    : CaptureWriter(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc), header) {
    if (!*out_) throw Error(ErrorCode::io_error, "cannot write capture " + path.string());
}

CaptureWriter::CaptureWriter(std::unique_ptr<std::ostream> out, CaptureHeader header)
    : out_(std::move(out)), header_(header) {
    put32(header_.timestamp_unit == TimestampUnit::nanosecond ? kPcapMagicNano : kPcapMagicMicro);
    put16(header_.version_major);
    put16(header_.version_minor);
    put32(0);  // thiszone
    put32(0);  // sigfigs
    put32(header_.snap_len);
    put32(header_.link_type);
}

void CaptureWriter::put32(std::uint32_t v) {
    if (header_.byte_order == ByteOrder::swapped) v = bswap32(v);
    out_->write(reinterpret_cast<const char*>(&v), 4);
}

void CaptureWriter::put16(std::uint16_t v) {
    if (header_.byte_order == ByteOrder::swapped) v = bswap16(v);
    out_->write(reinterpret_cast<const char*>(&v), 2);
}

void CaptureWriter::write(std::int64_t ts_ns, std::span<const std::uint8_t> frame, std::optional<std::uint32_t> orig_len) {
    const auto caplen = static_cast<std::uint32_t>(std::min<std::size_t>(frame.size(), header_.snap_len));
    std::int64_t sec = ts_ns / 1'000'000'000;
    std::int64_t rem = ts_ns % 1'000'000'000;
    if (rem < 0) {
        rem += 1'000'000'000;
        --sec;
    }
    put32(static_cast<std::uint32_t>(sec));
    put32(static_cast<std::uint32_t>(header_.timestamp_unit == TimestampUnit::nanosecond ? rem : rem / 1000));
    put32(caplen);
    put32(orig_len.value_or(static_cast<std::uint32_t>(frame.size())));
    out_->write(reinterpret_cast<const char*>(frame.data()), caplen);
}

void CaptureWriter::flush() { out_->flush(); }

}  // namespace nidsgen
