#include "trafprof/dns.hpp"

#include "trafprof/bytes.hpp"
#include "trafprof/tls.hpp"

namespace trafprof::dns {

namespace {

constexpr int kMaxPointerJumps = 16;
constexpr std::size_t kMaxNameLength = 255;

/// Reads a possibly-compressed name starting at the reader's position and
/// leaves the reader just past the name as it appears in place.
std::optional<std::string> read_name(std::span<const std::uint8_t> message, ByteReader& r) {
    std::string name;
    ByteReader cur = r;
    bool jumped = false;
    for (int jumps = 0;;) {
        const std::uint8_t len = cur.u8();
        if (cur.failed()) return std::nullopt;
        if ((len & 0xc0) == 0xc0) {
            const std::size_t target = (std::size_t{len & 0x3fu} << 8) | cur.u8();
            if (cur.failed() || ++jumps > kMaxPointerJumps) return std::nullopt;
            if (!jumped) {
                r = cur;
                jumped = true;
            }
            cur = ByteReader{message};
            if (!cur.seek(target)) return std::nullopt;
            continue;
        }
        if ((len & 0xc0) != 0) return std::nullopt;
        if (len == 0) break;
        auto label = cur.bytes(len);
        if (cur.failed()) return std::nullopt;
        if (!name.empty()) name.push_back('.');
        name.append(label.begin(), label.end());
        if (name.size() > kMaxNameLength) return std::nullopt;
    }
    if (!jumped) r = cur;
    return name;
}

void write_name(ByteWriter& w, const std::string& name) {
    std::size_t start = 0;
    while (start < name.size()) {
        auto dot = name.find('.', start);
        if (dot == std::string::npos) dot = name.size();
        w.u8(static_cast<std::uint8_t>(dot - start));
        w.text(name.substr(start, dot - start));
        start = dot + 1;
    }
    w.u8(0);
}

void write_header(ByteWriter& w, std::uint16_t id, std::uint16_t flags, std::uint16_t answers) {
    w.u16(id);
    w.u16(flags);
    w.u16(1);
    w.u16(answers);
    w.u16(0);
    w.u16(0);
}

}  // namespace

std::optional<Response> parse_response(std::span<const std::uint8_t> message) {
    ByteReader r{message};
    r.skip(2);
    const std::uint16_t flags = r.u16();
    const std::uint16_t qdcount = r.u16();
    const std::uint16_t ancount = r.u16();
    r.skip(4);
    if (r.failed() || (flags & 0x8000) == 0 || qdcount == 0) return std::nullopt;

    Response out;
    for (std::uint16_t q = 0; q < qdcount; ++q) {
        auto name = read_name(message, r);
        r.skip(4);
        if (!name || r.failed()) return std::nullopt;
        if (q == 0) out.query_name = std::move(*name);
    }
    if (!tls::is_valid_hostname(out.query_name)) return std::nullopt;

    for (std::uint16_t a = 0; a < ancount; ++a) {
        if (!read_name(message, r)) return std::nullopt;
        const std::uint16_t type = r.u16();
        const std::uint16_t klass = r.u16();
        r.skip(4);
        const std::uint16_t rdlength = r.u16();
        ByteReader rdata = r.sub(rdlength);
        if (r.failed()) return std::nullopt;
        if (type == kTypeA && klass == kClassIn && rdlength == 4) out.addresses.push_back(Ipv4{rdata.u32()});
    }
    return out;
}

std::vector<std::uint8_t> build_query(std::uint16_t id, const std::string& name) {
    ByteWriter w;
    write_header(w, id, 0x0100, 0);
    write_name(w, name);
    w.u16(kTypeA);
    w.u16(kClassIn);
    return w.take();
}

std::vector<std::uint8_t> build_response(std::uint16_t id, const std::string& name, std::span<const Ipv4> addresses) {
    ByteWriter w;
    write_header(w, id, 0x8180, static_cast<std::uint16_t>(addresses.size()));
    write_name(w, name);
    w.u16(kTypeA);
    w.u16(kClassIn);
    for (const auto& ip : addresses) {
        w.u16(0xc00c);  // pointer to the question name
        w.u16(kTypeA);
        w.u16(kClassIn);
        w.u32(300);
        w.u16(4);
        w.u32(ip.value);
    }
    return w.take();
}

}  // namespace trafprof::dns
