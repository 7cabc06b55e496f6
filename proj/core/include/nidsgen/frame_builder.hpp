#pragma once

#include <cstdint>
#include <vector>

#include "nidsgen/net.hpp"
#include "nidsgen/pcap.hpp"

namespace nidsgen {

/// Description of a frame to synthesize. Checksums are left zero.
struct FrameSpec {
    Endpoint src;
    Endpoint dst;
    std::uint8_t protocol = kProtoTcp;
    std::uint8_t tcp_flags = 0;
    std::uint16_t tcp_window = 0;
    std::uint32_t payload_len = 0;
    std::uint8_t tcp_option_words = 0;  // extra 32-bit words of TCP options
    bool vlan = false;
};

/// Ethernet II frame carrying IPv4 or IPv6 (by src address family) and the
/// requested transport. Non-TCP/UDP protocols get a bare payload after IP.
std::vector<std::uint8_t> build_ethernet_frame(const FrameSpec& spec);

/// Gratuitous ARP request, for non-IP skip paths.
std::vector<std::uint8_t> build_arp_frame();

}  // namespace nidsgen
