#pragma once
// Minimal classic-pcap reader written from the file format alone. Shares no
// code with the library decoder.

#include <cstdint>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

struct Packet {
    std::int64_t ts_ns = 0;
    std::string src;  // "a.b.c.d" or 32 hex digits for IPv6
    std::string dst;
    std::uint16_t sport = 0;
    std::uint16_t dport = 0;
    int proto = 0;
    std::uint32_t ip_len = 0;   // on-wire IP length
    std::uint32_t hdr_len = 0;  // IP header + TCP/UDP header
    std::uint32_t payload = 0;
    std::uint8_t flags = 0;
    std::uint16_t window = 0;
};

struct Capture {
    std::vector<Packet> packets;
    std::size_t frames = 0;
    std::uint64_t ip_len_sum = 0;
};

inline std::uint32_t rd32(const unsigned char* p, bool be) {
    return be ? (std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 | p[3])
              : (std::uint32_t(p[3]) << 24 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[1]) << 8 | p[0]);
}
inline std::uint16_t net16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }

inline std::string v4_text(const unsigned char* p) {
    return std::to_string(p[0]) + "." + std::to_string(p[1]) + "." + std::to_string(p[2]) + "." + std::to_string(p[3]);
}
inline std::string v6_text(const unsigned char* p) {
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < 16; ++i) {
        s += hex[p[i] >> 4];
        s += hex[p[i] & 15];
    }
    return s;
}

/// Ethernet (optionally one 802.1Q tag) carrying IPv4 or IPv6 without
/// extension headers; anything else is not counted as a packet.
inline Capture read_pcap(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::vector<unsigned char> d((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (d.size() < 24) throw std::runtime_error("short file");
    bool be = false, nano = false;
    const std::uint32_t m = rd32(d.data(), false);
    if (m == 0xA1B2C3D4u) {
    } else if (m == 0xA1B23C4Du) {
        nano = true;
    } else if (m == 0xD4C3B2A1u) {
        be = true;
    } else if (m == 0x4D3CB2A1u) {
        be = true;
        nano = true;
    } else {
        throw std::runtime_error("bad magic");
    }
    Capture cap;
    std::size_t off = 24;
    while (off + 16 <= d.size()) {
        const std::uint32_t sec = rd32(&d[off], be), frac = rd32(&d[off + 4], be), incl = rd32(&d[off + 8], be);
        off += 16;
        if (off + incl > d.size()) break;
        const unsigned char* fr = &d[off];
        off += incl;
        ++cap.frames;
        std::size_t l2 = 14;
        if (incl < 14) continue;
        std::uint16_t et = net16(fr + 12);
        if (et == 0x8100) {
            if (incl < 18) continue;
            et = net16(fr + 16);
            l2 = 18;
        }
        Packet p;
        p.ts_ns = std::int64_t(sec) * 1000000000LL + (nano ? std::int64_t(frac) : std::int64_t(frac) * 1000);
        const unsigned char* ip = fr + l2;
        std::size_t ip_hdr = 0;
        if (et == 0x0800) {
            ip_hdr = (ip[0] & 15) * 4u;
            p.ip_len = net16(ip + 2);
            p.proto = ip[9];
            p.src = v4_text(ip + 12);
            p.dst = v4_text(ip + 16);
        } else if (et == 0x86DD) {
            ip_hdr = 40;
            p.ip_len = 40u + net16(ip + 4);
            p.proto = ip[6];
            p.src = v6_text(ip + 8);
            p.dst = v6_text(ip + 24);
        } else {
            continue;
        }
        const unsigned char* l4 = ip + ip_hdr;
        std::size_t l4_hdr = 0;
        if (p.proto == 6) {
            p.sport = net16(l4);
            p.dport = net16(l4 + 2);
            l4_hdr = (l4[12] >> 4) * 4u;
            p.flags = l4[13];
            p.window = net16(l4 + 14);
        } else if (p.proto == 17) {
            p.sport = net16(l4);
            p.dport = net16(l4 + 2);
            l4_hdr = 8;
        }
        p.hdr_len = static_cast<std::uint32_t>(ip_hdr + l4_hdr);
        p.payload = p.ip_len - p.hdr_len;
        cap.ip_len_sum += p.ip_len;
        cap.packets.push_back(p);
    }
    return cap;
}

}  // namespace oracle
