#include "nidsgen/frame_builder.hpp"

namespace nidsgen {
namespace {

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

void put_mac_header(std::vector<std::uint8_t>& b, bool vlan, std::uint16_t ethertype) {
    const std::uint8_t dst_mac[6] = {0x02, 0x00, 0x00, 0x00, 0x00, 0x02};
    const std::uint8_t src_mac[6] = {0x02, 0x00, 0x00, 0x00, 0x00, 0x01};
    b.insert(b.end(), dst_mac, dst_mac + 6);
    b.insert(b.end(), src_mac, src_mac + 6);
    if (vlan) {
        put16(b, 0x8100);
        put16(b, 0x0064);
    }
    put16(b, ethertype);
}

}  // namespace

std::vector<std::uint8_t> build_ethernet_frame(const FrameSpec& spec) {
    const bool v6 = spec.src.ip.family == IpAddress::Family::v6;
    std::uint32_t transport_hdr = 0;
    if (spec.protocol == kProtoTcp) transport_hdr = 20u + 4u * spec.tcp_option_words;
    if (spec.protocol == kProtoUdp) transport_hdr = 8;
    const std::uint32_t l4_len = transport_hdr + spec.payload_len;

    std::vector<std::uint8_t> b;
    b.reserve(18 + 40 + l4_len);
    put_mac_header(b, spec.vlan, v6 ? 0x86DD : 0x0800);
    if (v6) {
        b.push_back(0x60);
        b.push_back(0);
        put16(b, 0);
        put16(b, static_cast<std::uint16_t>(l4_len));
        b.push_back(spec.protocol);
        b.push_back(64);
        b.insert(b.end(), spec.src.ip.bytes.begin(), spec.src.ip.bytes.end());
        b.insert(b.end(), spec.dst.ip.bytes.begin(), spec.dst.ip.bytes.end());
    } else {
        b.push_back(0x45);
        b.push_back(0);
        put16(b, static_cast<std::uint16_t>(20 + l4_len));
        put16(b, 0);       // id
        put16(b, 0x4000);  // DF
        b.push_back(64);
        b.push_back(spec.protocol);
        put16(b, 0);
        b.insert(b.end(), spec.src.ip.bytes.begin(), spec.src.ip.bytes.begin() + 4);
        b.insert(b.end(), spec.dst.ip.bytes.begin(), spec.dst.ip.bytes.begin() + 4);
    }
    if (spec.protocol == kProtoTcp) {
        put16(b, spec.src.port);
        put16(b, spec.dst.port);
        for (int i = 0; i < 8; ++i) b.push_back(0);  // seq, ack
        b.push_back(static_cast<std::uint8_t>((transport_hdr / 4) << 4));
        b.push_back(spec.tcp_flags);
        put16(b, spec.tcp_window);
        put16(b, 0);  // checksum
        put16(b, 0);  // urgent pointer
        for (std::uint32_t i = 0; i < 4u * spec.tcp_option_words; ++i) b.push_back(1);  // NOP
    } else if (spec.protocol == kProtoUdp) {
        put16(b, spec.src.port);
        put16(b, spec.dst.port);
        put16(b, static_cast<std::uint16_t>(l4_len));
        put16(b, 0);
    }
    for (std::uint32_t i = 0; i < spec.payload_len; ++i) b.push_back(static_cast<std::uint8_t>(i * 31u + 7u));
    return b;
}

std::vector<std::uint8_t> build_arp_frame() {
    std::vector<std::uint8_t> b;
    put_mac_header(b, false, 0x0806);
    const std::uint8_t arp[28] = {0x00, 0x01, 0x08, 0x00, 0x06, 0x04, 0x00, 0x01, 0x02, 0x00,
                                  0x00, 0x00, 0x00, 0x01, 10,   0,    0,    1,    0x00, 0x00,
                                  0x00, 0x00, 0x00, 0x00, 10,   0,    0,    1};
    b.insert(b.end(), arp, arp + 28);
    return b;
}

}  // namespace nidsgen
