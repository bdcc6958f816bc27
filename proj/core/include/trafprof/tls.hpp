#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trafprof::tls {

inline constexpr std::uint8_t kContentHandshake = 22;
inline constexpr std::uint8_t kContentApplicationData = 23;
inline constexpr std::uint8_t kHandshakeClientHello = 1;
inline constexpr std::uint16_t kExtServerName = 0;

/// Returns the first host_name entry of the server_name extension of a
/// ClientHello found in any TLS record at the start of `payload`. Malformed
/// or truncated input yields nullopt; nothing outside `payload` is read.
std::optional<std::string> client_hello_sni(std::span<const std::uint8_t> payload);

/// True for a plausible DNS hostname (LDH characters plus '_', 1..253 bytes).
bool is_valid_hostname(std::string_view name);

struct ClientHelloOptions {
    std::optional<std::string> server_name;
    bool include_extensions = true;
    std::size_t cipher_suite_count = 16;
    std::size_t padding = 0;  ///< size of an extra padding extension body
};

/// A single TLS 1.2 handshake record carrying a ClientHello.
std::vector<std::uint8_t> build_client_hello(const ClientHelloOptions& opts);

/// An application-data record header followed by `body_len` zero bytes.
std::vector<std::uint8_t> build_application_data(std::size_t body_len);

}  // namespace trafprof::tls
