#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "support/fixtures.hpp"
#include "trafprof/capture.hpp"
#include "trafprof/dns.hpp"
#include "trafprof/error.hpp"
#include "trafprof/tls.hpp"

using namespace trafprof;
using fixture::Bytes;

namespace {

const Ipv4 kDevice{10, 0, 0, 2};
const Ipv4 kServer{93, 184, 216, 34};

/// Little-endian pcap header followed by one Ethernet/IPv4/UDP record.
Bytes crafted_udp_pcap(std::size_t payload_len) {
    Bytes b;
    fixture::le32(b, 0xa1b2c3d4);
    fixture::le16(b, 2);
    fixture::le16(b, 4);
    fixture::le32(b, 0);
    fixture::le32(b, 0);
    fixture::le32(b, 65535);
    fixture::le32(b, 1);

    const auto frame_len = static_cast<std::uint32_t>(14 + 20 + 8 + payload_len);
    fixture::le32(b, 1'700'000'000);
    fixture::le32(b, 123'456);
    fixture::le32(b, frame_len);
    fixture::le32(b, frame_len);

    for (int i = 0; i < 6; ++i) b.push_back(0xaa);
    for (int i = 0; i < 6; ++i) b.push_back(0xbb);
    fixture::be16(b, 0x0800);

    b.push_back(0x45);
    b.push_back(0);
    fixture::be16(b, static_cast<unsigned>(20 + 8 + payload_len));
    fixture::be16(b, 7);
    fixture::be16(b, 0);
    b.push_back(64);
    b.push_back(17);
    fixture::be16(b, 0);
    for (std::uint8_t v : {10, 0, 0, 2}) b.push_back(v);
    for (std::uint8_t v : {8, 8, 4, 4}) b.push_back(v);

    fixture::be16(b, 40000);
    fixture::be16(b, 53);
    fixture::be16(b, static_cast<unsigned>(8 + payload_len));
    fixture::be16(b, 0);
    for (std::size_t i = 0; i < payload_len; ++i) b.push_back(static_cast<std::uint8_t>(i));
    return b;
}

Bytes pcap_header(std::uint32_t magic = 0xa1b2c3d4, std::uint32_t link = 1) {
    Bytes b;
    fixture::be32(b, magic);
    fixture::be16(b, 2);
    fixture::be16(b, 4);
    fixture::be32(b, 0);
    fixture::be32(b, 0);
    fixture::be32(b, 65535);
    fixture::be32(b, link);
    return b;
}

void append_record(Bytes& b, const Bytes& frame) {
    fixture::be32(b, 1);
    fixture::be32(b, 0);
    fixture::be32(b, static_cast<std::uint32_t>(frame.size()));
    fixture::be32(b, static_cast<std::uint32_t>(frame.size()));
    fixture::append(b, frame);
}

Bytes ether_frame(unsigned ether_type, std::size_t body) {
    Bytes f(12, 0x11);
    fixture::be16(f, ether_type);
    f.resize(f.size() + body, 0);
    return f;
}

PacketRecord tcp(std::uint64_t ts, Endpoint src, Endpoint dst, Bytes payload = {}) {
    return make_packet(ts, src, dst, Proto::tcp, std::move(payload));
}

/// Groups by key with a plain map and a stable timestamp sort.
std::map<FlowKey, std::vector<PacketRecord>> grouping_oracle(const std::vector<PacketRecord>& packets) {
    std::map<FlowKey, std::vector<PacketRecord>> out;
    for (const auto& p : packets) out[p.flow_key()].push_back(p);
    for (auto& [k, v] : out) {
        std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.ts_micros() < b.ts_micros(); });
    }
    return out;
}

}  // namespace

TEST_CASE("crafted little-endian pcap with a 60-byte UDP datagram") {
    const auto bytes = crafted_udp_pcap(60);
    REQUIRE(bytes.size() == 24 + 16 + 102);
    const auto contents = read_pcap(bytes);
    REQUIRE(contents.packets.size() == 1);
    const auto& p = contents.packets[0];
    CHECK(p.ts_sec == 1'700'000'000);
    CHECK(p.ts_usec == 123'456);
    CHECK(p.src_ip == Ipv4(10, 0, 0, 2));
    CHECK(p.dst_ip == Ipv4(8, 8, 4, 4));
    CHECK(p.src_port == 40000);
    CHECK(p.dst_port == 53);
    CHECK(p.proto == Proto::udp);
    CHECK(p.payload_len() == 60);
    CHECK(p.payload[59] == 59);
    CHECK(p.orig_len == 102);
    CHECK(p.link_frame.size() == 102);
    CHECK(contents.skipped.total() == 0);
}

TEST_CASE("empty capture and empty writer output") {
    CHECK(write_pcap({}).size() == kPcapGlobalHeaderSize);
    CHECK(read_pcap(write_pcap({})).packets.empty());
    CHECK(read_pcap(pcap_header()).packets.empty());
}

TEST_CASE("pcap round trip on generated record lists") {
    std::mt19937_64 rng{42};
    for (int trial = 0; trial < 50; ++trial) {
        const auto records = fixture::random_records(rng, 40);
        const auto bytes = write_pcap(records);
        const auto back = read_pcap(bytes);
        REQUIRE(back.packets == records);
        CHECK(back.skipped.total() == 0);
        CHECK(write_pcap(back.packets) == bytes);
    }
}

TEST_CASE("records without a link frame are synthesized on write") {
    PacketRecord r = make_packet(5'000'001, {kDevice, 1234}, {kServer, 443}, Proto::tcp, Bytes{1, 2, 3});
    PacketRecord bare = r;
    bare.link_frame.clear();
    const auto back = read_pcap(write_pcap(std::vector{bare}));
    REQUIRE(back.packets.size() == 1);
    CHECK(back.packets[0] == r);
}

TEST_CASE("pcap header errors") {
    CHECK_THROWS_AS(read_pcap(Bytes{}), TruncatedFile);
    CHECK_THROWS_AS(read_pcap(Bytes{0xa1, 0xb2}), TruncatedFile);
    CHECK_THROWS_AS(read_pcap(pcap_header(0x0a0d0d0a)), BadMagic);
    CHECK_THROWS_AS(read_pcap(pcap_header(0xa1b2c3d4, 101)), UnsupportedLinkType);

    auto truncated = write_pcap(std::vector{tcp(1, {kDevice, 1}, {kServer, 2})});
    truncated.pop_back();
    CHECK_THROWS_AS(read_pcap(truncated), TruncatedFile);
    auto short_header = pcap_header();
    short_header.resize(short_header.size() + 10, 0);
    CHECK_THROWS_AS(read_pcap(short_header), TruncatedFile);
    CHECK_THROWS_AS(read_pcap(truncated), DataError);
}

TEST_CASE("non-IPv4 and non-TCP/UDP frames are skipped and counted") {
    auto b = pcap_header();
    append_record(b, ether_frame(0x86dd, 40));
    append_record(b, ether_frame(0x8100, 40));
    append_record(b, ether_frame(0x0806, 28));
    auto icmp = make_packet(1, {kDevice, 0}, {kServer, 0}, Proto::udp, {}).link_frame;
    icmp[14 + 9] = 1;
    append_record(b, icmp);
    auto frag = make_packet(1, {kDevice, 5}, {kServer, 6}, Proto::udp, Bytes(10)).link_frame;
    frag[14 + 6] = 0x20;  // more fragments
    append_record(b, frag);
    append_record(b, Bytes{1, 2, 3});
    append_record(b, make_packet(1, {kDevice, 5}, {kServer, 6}, Proto::udp, Bytes(10)).link_frame);

    const auto c = read_pcap(b);
    CHECK(c.packets.size() == 1);
    CHECK(c.skipped.ipv6 == 1);
    CHECK(c.skipped.vlan == 1);
    CHECK(c.skipped.non_ipv4 == 1);
    CHECK(c.skipped.non_tcp_udp == 1);
    CHECK(c.skipped.fragments == 1);
    CHECK(c.skipped.malformed == 1);
    CHECK(c.skipped.total() == 6);
}

TEST_CASE("flow key symmetry") {
    const Endpoint a{kDevice, 5555}, b{kServer, 443};
    CHECK(FlowKey::of(a, b, Proto::tcp) == FlowKey::of(b, a, Proto::tcp));
    CHECK(FlowKey::of(a, b, Proto::tcp) != FlowKey::of(a, b, Proto::udp));
    const auto key = FlowKey::of(a, b, Proto::tcp);
    CHECK(FlowKey::parse(key.to_string()) == key);
}

TEST_CASE("assemble_streams basics") {
    CHECK(assemble_streams({}, kDevice).empty());
    const Endpoint a{kDevice, 5555}, b{kServer, 443};
    std::vector<PacketRecord> ps{tcp(1, a, b), tcp(2, b, a), tcp(3, a, b), tcp(4, b, a)};
    const auto streams = assemble_streams(ps, kDevice);
    REQUIRE(streams.size() == 1);
    CHECK(streams[0].packets == ps);
    CHECK(streams[0].device_ip == kDevice);
    CHECK_FALSE(streams[0].foreign());
    CHECK(streams[0].remote() == b);

    const auto foreign = assemble_streams(std::vector{tcp(1, {kServer, 1}, {Ipv4{1, 1, 1, 1}, 2})}, kDevice);
    CHECK(foreign[0].foreign());
}

TEST_CASE("assemble_streams is invariant to shuffling") {
    std::mt19937_64 rng{7};
    for (int trial = 0; trial < 30; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 8);
        std::vector<PacketRecord> ps;
        for (int f = 0; f < k; ++f) {
            const Endpoint dev{kDevice, static_cast<std::uint16_t>(30000 + f)};
            const Endpoint srv{Ipv4{static_cast<std::uint32_t>(0x64400000 + f)}, 443};
            const int n = 1 + static_cast<int>(rng() % 12);
            for (int i = 0; i < n; ++i) {
                // Coarse timestamps so ties occur and stability matters.
                const std::uint64_t ts = 1'000'000 * (rng() % 5);
                Bytes payload{static_cast<std::uint8_t>(f), static_cast<std::uint8_t>(i)};
                ps.push_back((rng() & 1) ? tcp(ts, dev, srv, payload) : tcp(ts, srv, dev, payload));
            }
        }
        auto shuffled = ps;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);

        const auto streams = assemble_streams(shuffled, kDevice);
        const auto expected = grouping_oracle(shuffled);
        REQUIRE(streams.size() == expected.size());
        REQUIRE(static_cast<int>(streams.size()) == k);
        for (std::size_t s = 0; s < streams.size(); ++s) {
            CHECK(streams[s].packets == expected.at(streams[s].key));
            for (const auto& p : streams[s].packets) CHECK(p.flow_key() == streams[s].key);
            if (s > 0) CHECK(streams[s - 1].packets.front().ts_micros() <= streams[s].packets.front().ts_micros());
        }

        // Same multiset of packets per stream regardless of input order.
        const auto base = assemble_streams(ps, kDevice);
        REQUIRE(base.size() == streams.size());
        for (std::size_t s = 0; s < base.size(); ++s) {
            CHECK(base[s].key == streams[s].key);
            auto x = base[s].packets, y = streams[s].packets;
            auto by_payload = [](const PacketRecord& l, const PacketRecord& r) {
                return std::tie(l.ts_sec, l.ts_usec, l.payload, l.src_port) < std::tie(r.ts_sec, r.ts_usec, r.payload, r.src_port);
            };
            std::sort(x.begin(), x.end(), by_payload);
            std::sort(y.begin(), y.end(), by_payload);
            CHECK(x == y);
        }
    }
}

TEST_CASE("SNI from a hand-assembled ClientHello") {
    CHECK(tls::client_hello_sni(fixture::client_hello("example.com")) == std::optional<std::string>{"example.com"});
    CHECK_FALSE(tls::client_hello_sni(fixture::client_hello("", false)).has_value());
    CHECK_FALSE(tls::client_hello_sni(fixture::client_hello("")).has_value());
    CHECK_FALSE(tls::client_hello_sni(fixture::client_hello("example.com", true, 1)).has_value());

    // Builder output agrees with the hand assembly.
    tls::ClientHelloOptions opts;
    opts.server_name = "example.com";
    CHECK(tls::client_hello_sni(tls::build_client_hello(opts)) == std::optional<std::string>{"example.com"});

    const Endpoint dev{kDevice, 40000}, srv{kServer, 443};
    Stream s = assemble_streams(std::vector{tcp(1, dev, srv), tcp(2, dev, srv, fixture::client_hello("example.com"))},
                                kDevice)[0];
    CHECK(extract_sni(s) == std::optional<std::string>{"example.com"});
    Stream plain = assemble_streams(std::vector{tcp(1, dev, srv, Bytes{23, 3, 3, 0, 1, 0})}, kDevice)[0];
    CHECK_FALSE(extract_sni(plain).has_value());
}

TEST_CASE("SNI parser survives truncation and mutation") {
    const auto hello = fixture::client_hello("video.example.org");
    for (std::size_t n = 0; n < hello.size(); ++n) {
        // A copy of exactly n bytes so any over-read is outside the allocation.
        const Bytes prefix(hello.begin(), hello.begin() + static_cast<long>(n));
        CHECK_FALSE(tls::client_hello_sni(prefix).has_value());
    }
    std::mt19937_64 rng{99};
    for (int trial = 0; trial < 2000; ++trial) {
        Bytes m = hello;
        const int flips = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < flips; ++i) m[rng() % m.size()] = static_cast<std::uint8_t>(rng());
        if (auto host = tls::client_hello_sni(m)) CHECK(tls::is_valid_hostname(*host));
    }
    for (int trial = 0; trial < 2000; ++trial) {
        Bytes r(rng() % 300);
        for (auto& c : r) c = static_cast<std::uint8_t>(rng());
        if (!r.empty()) r[0] = 22;
        if (auto host = tls::client_hello_sni(r)) CHECK(tls::is_valid_hostname(*host));
    }
}

TEST_CASE("DNS responses assembled by hand") {
    const auto one = dns::parse_response(fixture::dns_response("e.whatsapp.net", {0x01020304}));
    REQUIRE(one.has_value());
    CHECK(one->query_name == "e.whatsapp.net");
    REQUIRE(one->addresses.size() == 1);
    CHECK(one->addresses[0] == Ipv4(1, 2, 3, 4));

    const Endpoint dns_srv{Ipv4{10, 0, 0, 1}, 53}, dev{kDevice, 5353};
    std::vector<PacketRecord> ps{
        make_packet(1, dns_srv, dev, Proto::udp, fixture::dns_response("e.whatsapp.net", {0x01020304})),
        make_packet(2, dns_srv, dev, Proto::udp, fixture::dns_response("cdn.example", {0x05060708, 0x090a0b0c})),
    };
    auto map = build_dns_map(ps);
    CHECK(map.responses == 2);
    CHECK(map.malformed == 0);
    CHECK(map.hosts == std::map<Ipv4, std::string>{{Ipv4(1, 2, 3, 4), "e.whatsapp.net"},
                                                   {Ipv4(5, 6, 7, 8), "cdn.example"},
                                                   {Ipv4(9, 10, 11, 12), "cdn.example"}});

    // Later answers overwrite earlier ones.
    ps.push_back(make_packet(3, dns_srv, dev, Proto::udp, fixture::dns_response("late.example", {0x01020304})));
    CHECK(build_dns_map(ps).hosts.at(Ipv4(1, 2, 3, 4)) == "late.example");

    CHECK(build_dns_map(std::vector{tcp(1, {kDevice, 1}, {kServer, 443})}).hosts.empty());
}

TEST_CASE("DNS malformed input is skipped and counted") {
    // Query (QR clear) and a compression pointer pointing at itself.
    auto query = dns::build_query(9, "a.example");
    CHECK_FALSE(dns::parse_response(query).has_value());

    Bytes loop;
    fixture::be16(loop, 1);
    fixture::be16(loop, 0x8180);
    fixture::be16(loop, 1);
    fixture::be16(loop, 1);
    fixture::be16(loop, 0);
    fixture::be16(loop, 0);
    fixture::be16(loop, 0xc00c);
    fixture::be16(loop, 1);
    fixture::be16(loop, 1);
    CHECK_FALSE(dns::parse_response(loop).has_value());

    const Endpoint dns_srv{Ipv4{10, 0, 0, 1}, 53}, dev{kDevice, 5353};
    auto map = build_dns_map(std::vector{make_packet(1, dns_srv, dev, Proto::udp, loop)});
    CHECK(map.malformed == 1);
    CHECK(map.hosts.empty());

    std::mt19937_64 rng{5};
    const auto good = fixture::dns_response("x.example.net", {0x0a000001, 0x0a000002});
    for (int trial = 0; trial < 3000; ++trial) {
        Bytes m = good;
        m.resize(rng() % (good.size() + 1));
        if (!m.empty()) m[rng() % m.size()] = static_cast<std::uint8_t>(rng());
        (void)dns::parse_response(m);
    }
}

TEST_CASE("label_host precedence") {
    const Endpoint dev{kDevice, 40000}, srv{kServer, 443};
    const std::map<Ipv4, std::string> dns_map{{kServer, "from-dns.example"}};

    Stream with_sni =
        assemble_streams(std::vector{tcp(1, dev, srv, fixture::client_hello("from-sni.example"))}, kDevice)[0];
    CHECK(label_host(with_sni, dns_map) == std::optional<std::string>{"from-sni.example"});
    CHECK(with_sni.host == std::optional<std::string>{"from-sni.example"});

    Stream no_sni = assemble_streams(std::vector{tcp(1, dev, srv)}, kDevice)[0];
    CHECK(label_host(no_sni, dns_map) == std::optional<std::string>{"from-dns.example"});

    Stream unknown = assemble_streams(std::vector{tcp(1, dev, {Ipv4{1, 1, 1, 1}, 443})}, kDevice)[0];
    CHECK_FALSE(label_host(unknown, dns_map).has_value());
    CHECK_FALSE(unknown.host.has_value());
}

TEST_CASE("stream export lines round trip") {
    const Endpoint dev{kDevice, 40000}, srv{kServer, 443};
    Stream s = assemble_streams(std::vector{tcp(1'000'000, dev, srv, Bytes(100)), tcp(1'250'000, srv, dev, Bytes(7))},
                                kDevice)[0];
    s.host = "h.example";
    s.app_label = "facebook";
    const auto rec = summarize(s, "a.pcap");
    REQUIRE(rec.packets.size() == 2);
    CHECK(rec.packets[0].outgoing);
    CHECK_FALSE(rec.packets[1].outgoing);
    CHECK(rec.packets[0].size == 100 + frame_overhead(Proto::tcp));
    CHECK(rec.packets[1].ts_usec == 250'000);
    CHECK(parse_stream_line(to_json_line(rec)) == rec);
    CHECK_THROWS_AS(parse_stream_line("{"), DataError);
    CHECK_THROWS_AS(parse_stream_line(R"({"key":"k","packets":[[1,2,3]]})"), DataError);
}

TEST_CASE("ingest_capture filters and counts") {
    const Endpoint dev{kDevice, 40000}, srv{kServer, 443}, dns_srv{Ipv4{10, 0, 0, 1}, 53};
    std::vector<PacketRecord> ps{
        make_packet(1, {kDevice, 5353}, dns_srv, Proto::udp, dns::build_query(1, "x.example")),
        make_packet(2, dns_srv, {kDevice, 5353}, Proto::udp, fixture::dns_response("x.example", {kServer.value})),
        tcp(3, dev, srv),
        tcp(4, {kDevice, 40001}, {Ipv4{2, 2, 2, 2}, 443}, fixture::client_hello("sni.example")),
        tcp(5, {kDevice, 40002}, {Ipv4{3, 3, 3, 3}, 443}),
        tcp(6, {Ipv4{4, 4, 4, 4}, 1}, {Ipv4{5, 5, 5, 5}, 2}),
    };
    PcapContents c{ps, {}};
    IngestReport report;
    const auto kept = ingest_capture(c, kDevice, report);
    CHECK(kept.size() == 3);
    CHECK(report.packets == 6);
    CHECK(report.dns_streams == 1);
    CHECK(report.foreign_streams == 1);
    CHECK(report.labeled_by_dns == 1);
    CHECK(report.labeled_by_sni == 1);
    CHECK(report.unlabeled == 1);
    CHECK(report.streams == 3);
}
