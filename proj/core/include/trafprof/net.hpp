#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace trafprof {

/// IPv4 address in host byte order.
struct Ipv4 {
    std::uint32_t value = 0;

    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t v) : value{v} {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d} {}

    auto operator<=>(const Ipv4&) const = default;

    std::string to_string() const;
    static std::optional<Ipv4> parse(std::string_view text);
};

enum class Proto : std::uint8_t { tcp = 6, udp = 17 };

std::string_view to_string(Proto p);
std::optional<Proto> parse_proto(std::string_view text);

struct Endpoint {
    Ipv4 ip;
    std::uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;
};

/// Direction-free transport 5-tuple: the lexicographically smaller endpoint
/// is always `lo`, so both directions of a conversation share one key.
struct FlowKey {
    Endpoint lo;
    Endpoint hi;
    Proto proto = Proto::tcp;

    static FlowKey of(Endpoint a, Endpoint b, Proto proto) {
        return a <= b ? FlowKey{a, b, proto} : FlowKey{b, a, proto};
    }

    auto operator<=>(const FlowKey&) const = default;

    bool involves(Ipv4 ip) const { return lo.ip == ip || hi.ip == ip; }

    /// "tcp:10.0.0.2:40001-100.64.1.2:443"
    std::string to_string() const;
    static std::optional<FlowKey> parse(std::string_view text);
};

}  // namespace trafprof

template <>
struct std::hash<trafprof::FlowKey> {
    std::size_t operator()(const trafprof::FlowKey& k) const noexcept {
        std::uint64_t h = (std::uint64_t{k.lo.ip.value} << 32) | k.hi.ip.value;
        h ^= (std::uint64_t{k.lo.port} << 40) ^ (std::uint64_t{k.hi.port} << 16) ^ static_cast<std::uint64_t>(k.proto);
        h *= 0x9e3779b97f4a7c15ULL;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};
