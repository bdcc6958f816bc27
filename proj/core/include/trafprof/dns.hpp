#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafprof/net.hpp"

namespace trafprof::dns {

inline constexpr std::uint16_t kPort = 53;
inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kClassIn = 1;

/// The A-record content of one DNS response.
struct Response {
    std::string query_name;
    std::vector<Ipv4> addresses;
};

/// Parses a DNS response message (QR set). Returns nullopt for queries and
/// for malformed messages; compression pointers are followed with loop
/// protection.
std::optional<Response> parse_response(std::span<const std::uint8_t> message);

std::vector<std::uint8_t> build_query(std::uint16_t id, const std::string& name);
std::vector<std::uint8_t> build_response(std::uint16_t id, const std::string& name, std::span<const Ipv4> addresses);

}  // namespace trafprof::dns
