#include "trafprof/net.hpp"

#include <charconv>

#include <fmt/format.h>

namespace trafprof {

std::string Ipv4::to_string() const {
    return fmt::format("{}.{}.{}.{}", value >> 24, (value >> 16) & 0xff, (value >> 8) & 0xff, value & 0xff);
}

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
    std::uint32_t out = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
        unsigned v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || next == p || v > 255 || next - p > 3) return std::nullopt;
        out = (out << 8) | v;
        p = next;
    }
    if (p != end) return std::nullopt;
    return Ipv4{out};
}

std::string_view to_string(Proto p) {
    return p == Proto::tcp ? "tcp" : "udp";
}

std::optional<Proto> parse_proto(std::string_view text) {
    if (text == "tcp") return Proto::tcp;
    if (text == "udp") return Proto::udp;
    return std::nullopt;
}

std::string FlowKey::to_string() const {
    return fmt::format("{}:{}:{}-{}:{}", trafprof::to_string(proto), lo.ip.to_string(), lo.port, hi.ip.to_string(),
                       hi.port);
}

namespace {

std::optional<Endpoint> parse_endpoint(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto ip = Ipv4::parse(text.substr(0, colon));
    if (!ip) return std::nullopt;
    auto port_text = text.substr(colon + 1);
    unsigned port = 0;
    auto [next, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || next != port_text.data() + port_text.size() || port > 0xffff) return std::nullopt;
    return Endpoint{*ip, static_cast<std::uint16_t>(port)};
}

}  // namespace

std::optional<FlowKey> FlowKey::parse(std::string_view text) {
    auto colon = text.find(':');
    auto dash = text.find('-');
    if (colon == std::string_view::npos || dash == std::string_view::npos || dash < colon) return std::nullopt;
    auto proto = parse_proto(text.substr(0, colon));
    auto a = parse_endpoint(text.substr(colon + 1, dash - colon - 1));
    auto b = parse_endpoint(text.substr(dash + 1));
    if (!proto || !a || !b) return std::nullopt;
    return FlowKey::of(*a, *b, *proto);
}

}  // namespace trafprof
