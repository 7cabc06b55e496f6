#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nidsgen {

/// IPv4 or IPv6 address. IPv4 occupies the first four bytes; the family byte
/// orders all IPv4 addresses before IPv6 ones.
struct IpAddress {
    enum class Family : std::uint8_t { v4 = 4, v6 = 6 };

    Family family = Family::v4;
    std::array<std::uint8_t, 16> bytes{};

    static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
    static IpAddress v4(std::uint32_t host_order);
    static IpAddress v6(const std::array<std::uint8_t, 16>& raw);
    static std::optional<IpAddress> parse(std::string_view text);

    std::string to_string() const;

    auto operator<=>(const IpAddress&) const = default;
    bool operator==(const IpAddress&) const = default;
};

struct Endpoint {
    IpAddress ip;
    std::uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;
    bool operator==(const Endpoint&) const = default;
};

}  // namespace nidsgen
