#include "trafprof/tls.hpp"

#include <algorithm>

#include "trafprof/bytes.hpp"

namespace trafprof::tls {

namespace {

std::optional<std::string> sni_from_extensions(ByteReader ext) {
    while (ext.remaining() >= 4) {
        const std::uint16_t type = ext.u16();
        const std::uint16_t len = ext.u16();
        ByteReader body = ext.sub(len);
        if (ext.failed()) return std::nullopt;
        if (type != kExtServerName) continue;
        ByteReader list = body.sub(body.u16());
        while (!list.failed() && list.remaining() >= 3) {
            const std::uint8_t name_type = list.u8();
            auto name = list.bytes(list.u16());
            if (list.failed()) return std::nullopt;
            if (name_type != 0) continue;
            std::string host(name.begin(), name.end());
            if (!is_valid_hostname(host)) return std::nullopt;
            return host;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<std::string> sni_from_handshake(ByteReader hs) {
    if (hs.u8() != kHandshakeClientHello) return std::nullopt;
    const std::uint32_t len = hs.u24();
    if (hs.failed()) return std::nullopt;
    // A ClientHello split across records or segments is cut short here.
    ByteReader hello = hs.sub(std::min<std::size_t>(len, hs.remaining()));
    hello.skip(2 + 32);              // client_version, random
    hello.skip(hello.u8());          // session_id
    hello.skip(hello.u16());         // cipher_suites
    hello.skip(hello.u8());          // compression_methods
    if (hello.failed() || hello.remaining() < 2) return std::nullopt;
    ByteReader ext = hello.sub(hello.u16());
    if (hello.failed()) return std::nullopt;
    return sni_from_extensions(ext);
}

}  // namespace

bool is_valid_hostname(std::string_view name) {
    if (name.empty() || name.size() > 253) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
               c == '.' || c == '_';
    });
}

std::optional<std::string> client_hello_sni(std::span<const std::uint8_t> payload) {
    ByteReader r{payload};
    while (r.remaining() >= 5) {
        const std::uint8_t content_type = r.u8();
        const std::uint16_t version = r.u16();
        const std::uint16_t len = r.u16();
        if ((version >> 8) != 0x03) return std::nullopt;
        ByteReader record = r.sub(std::min<std::size_t>(len, r.remaining()));
        if (content_type == kContentHandshake) {
            if (auto host = sni_from_handshake(record)) return host;
        }
    }
    return std::nullopt;
}

std::vector<std::uint8_t> build_client_hello(const ClientHelloOptions& opts) {
    ByteWriter w;
    w.u8(kContentHandshake);
    w.u16(0x0301);
    const std::size_t record_len_at = w.size();
    w.u16(0);
    const std::size_t record_start = w.size();
    w.u8(kHandshakeClientHello);
    const std::size_t hs_len_at = w.size();
    w.u24(0);
    const std::size_t hs_start = w.size();
    w.u16(0x0303);
    for (int i = 0; i < 32; ++i) w.u8(static_cast<std::uint8_t>(i * 7 + 3));
    w.u8(0);  // empty session id
    w.u16(static_cast<std::uint16_t>(2 * opts.cipher_suite_count));
    for (std::size_t i = 0; i < opts.cipher_suite_count; ++i) w.u16(static_cast<std::uint16_t>(0xc02b + i));
    w.u8(1);
    w.u8(0);  // null compression
    if (opts.include_extensions) {
        const std::size_t ext_len_at = w.size();
        w.u16(0);
        const std::size_t ext_start = w.size();
        if (opts.server_name) {
            const auto& name = *opts.server_name;
            w.u16(kExtServerName);
            w.u16(static_cast<std::uint16_t>(name.size() + 5));
            w.u16(static_cast<std::uint16_t>(name.size() + 3));
            w.u8(0);
            w.u16(static_cast<std::uint16_t>(name.size()));
            w.text(name);
        }
        // supported_versions: TLS 1.3, 1.2
        w.u16(0x002b);
        w.u16(5);
        w.u8(4);
        w.u16(0x0304);
        w.u16(0x0303);
        if (opts.padding > 0) {
            w.u16(0x0015);
            w.u16(static_cast<std::uint16_t>(opts.padding));
            for (std::size_t i = 0; i < opts.padding; ++i) w.u8(0);
        }
        w.patch(ext_len_at, static_cast<std::uint32_t>(w.size() - ext_start), 2);
    }
    w.patch(hs_len_at, static_cast<std::uint32_t>(w.size() - hs_start), 3);
    w.patch(record_len_at, static_cast<std::uint32_t>(w.size() - record_start), 2);
    return w.take();
}

std::vector<std::uint8_t> build_application_data(std::size_t body_len) {
    ByteWriter w;
    w.u8(kContentApplicationData);
    w.u16(0x0303);
    w.u16(static_cast<std::uint16_t>(std::min<std::size_t>(body_len, 0xffff)));
    w.data().resize(w.size() + body_len, 0);
    return w.take();
}

}  // namespace trafprof::tls
