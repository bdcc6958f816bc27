#pragma once

// Hand-assembled protocol bytes, built field by field from the wire layouts
// rather than through the library's builders.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trafprof/pcap.hpp"

namespace fixture {

using Bytes = std::vector<std::uint8_t>;

inline void be16(Bytes& b, unsigned v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

inline void be24(Bytes& b, unsigned v) {
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    be16(b, v & 0xffff);
}

inline void be32(Bytes& b, std::uint32_t v) {
    be16(b, v >> 16);
    be16(b, v & 0xffff);
}

inline void le16(Bytes& b, unsigned v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void le32(Bytes& b, std::uint32_t v) {
    le16(b, v & 0xffff);
    le16(b, v >> 16);
}

inline void append(Bytes& b, const Bytes& more) {
    b.insert(b.end(), more.begin(), more.end());
}

/// TLS record (type 22) holding a ClientHello. With `host` empty and
/// `with_extensions` false the extension block is omitted entirely.
inline Bytes client_hello(const std::string& host, bool with_extensions = true, unsigned name_type = 0) {
    Bytes body;
    be16(body, 0x0303);
    for (int i = 0; i < 32; ++i) body.push_back(static_cast<std::uint8_t>(i));
    body.push_back(0);  // session id length
    be16(body, 4);
    be16(body, 0x1301);
    be16(body, 0x002f);
    body.push_back(1);  // compression methods
    body.push_back(0);
    if (with_extensions) {
        Bytes ext;
        // An unrelated extension first (ec_point_formats).
        be16(ext, 0x000b);
        be16(ext, 2);
        ext.push_back(1);
        ext.push_back(0);
        if (!host.empty()) {
            Bytes list;
            list.push_back(static_cast<std::uint8_t>(name_type));
            be16(list, static_cast<unsigned>(host.size()));
            list.insert(list.end(), host.begin(), host.end());
            be16(ext, 0x0000);
            be16(ext, static_cast<unsigned>(list.size() + 2));
            be16(ext, static_cast<unsigned>(list.size()));
            append(ext, list);
        }
        be16(body, static_cast<unsigned>(ext.size()));
        append(body, ext);
    }
    Bytes hs;
    hs.push_back(1);
    be24(hs, static_cast<unsigned>(body.size()));
    append(hs, body);
    Bytes rec;
    rec.push_back(22);
    be16(rec, 0x0301);
    be16(rec, static_cast<unsigned>(hs.size()));
    append(rec, hs);
    return rec;
}

inline void dns_name(Bytes& b, const std::string& name) {
    std::size_t start = 0;
    while (start <= name.size()) {
        const auto dot = name.find('.', start);
        const auto end = dot == std::string::npos ? name.size() : dot;
        b.push_back(static_cast<std::uint8_t>(end - start));
        b.insert(b.end(), name.begin() + static_cast<long>(start), name.begin() + static_cast<long>(end));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    b.push_back(0);
}

/// Response with one question and one compressed A answer per address.
inline Bytes dns_response(const std::string& name, const std::vector<std::uint32_t>& addresses) {
    Bytes b;
    be16(b, 0x1234);
    be16(b, 0x8180);
    be16(b, 1);
    be16(b, static_cast<unsigned>(addresses.size()));
    be16(b, 0);
    be16(b, 0);
    dns_name(b, name);
    be16(b, 1);
    be16(b, 1);
    for (auto a : addresses) {
        be16(b, 0xc00c);
        be16(b, 1);
        be16(b, 1);
        be32(b, 60);
        be16(b, 4);
        be32(b, a);
    }
    return b;
}

/// Random packet records whose frames come from make_packet.
inline std::vector<trafprof::PacketRecord> random_records(std::mt19937_64& rng, std::size_t max_count) {
    std::uniform_int_distribution<std::size_t> count{0, max_count};
    std::uniform_int_distribution<std::uint32_t> u32;
    std::uniform_int_distribution<unsigned> port{1, 65535}, len{0, 1400}, byte{0, 255};
    std::vector<trafprof::PacketRecord> out;
    const auto n = count(rng);
    std::uint64_t ts = 1'600'000'000'000'000 + u32(rng);
    for (std::size_t i = 0; i < n; ++i) {
        ts += u32(rng) % 3'000'000;
        Bytes payload(len(rng));
        for (auto& c : payload) c = static_cast<std::uint8_t>(byte(rng));
        const auto proto = (u32(rng) & 1) ? trafprof::Proto::tcp : trafprof::Proto::udp;
        out.push_back(trafprof::make_packet(ts, {trafprof::Ipv4{u32(rng)}, static_cast<std::uint16_t>(port(rng))},
                                            {trafprof::Ipv4{u32(rng)}, static_cast<std::uint16_t>(port(rng))}, proto,
                                            std::move(payload)));
    }
    return out;
}

}  // namespace fixture
