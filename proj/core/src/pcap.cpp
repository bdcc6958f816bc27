#include "trafprof/pcap.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "trafprof/bytes.hpp"
#include "trafprof/error.hpp"

namespace trafprof {

SkipCounters& SkipCounters::operator+=(const SkipCounters& o) {
    vlan += o.vlan;
    ipv6 += o.ipv6;
    non_ipv4 += o.non_ipv4;
    non_tcp_udp += o.non_tcp_udp;
    fragments += o.fragments;
    malformed += o.malformed;
    return *this;
}

namespace {

constexpr std::uint16_t kEtherIpv4 = 0x0800;
constexpr std::uint16_t kEtherIpv6 = 0x86dd;
constexpr std::uint16_t kEtherVlan = 0x8100;
constexpr std::uint16_t kEtherQinQ = 0x88a8;

constexpr std::uint32_t kSwappedMagic = 0xd4c3b2a1;
constexpr std::uint32_t kMaxSnaplen = 262144;

enum class FrameResult { ok, vlan, ipv6, non_ipv4, non_tcp_udp, fragment, malformed };

/// Decodes one Ethernet frame into `rec`; headers are always network order.
FrameResult decode_frame(std::span<const std::uint8_t> frame, PacketRecord& rec) {
    ByteReader eth{frame};
    eth.skip(12);
    const std::uint16_t ether_type = eth.u16();
    if (eth.failed()) return FrameResult::malformed;
    if (ether_type == kEtherVlan || ether_type == kEtherQinQ) return FrameResult::vlan;
    if (ether_type == kEtherIpv6) return FrameResult::ipv6;
    if (ether_type != kEtherIpv4) return FrameResult::non_ipv4;

    const std::size_t ip_start = eth.position();
    ByteReader ip{frame.subspan(ip_start)};
    const std::uint8_t ver_ihl = ip.u8();
    if (ip.failed() || (ver_ihl >> 4) != 4) return FrameResult::malformed;
    const std::size_t ihl = std::size_t{ver_ihl & 0x0fu} * 4;
    ip.skip(1);
    const std::uint16_t total_len = ip.u16();
    ip.skip(2);
    const std::uint16_t frag = ip.u16();
    ip.skip(1);
    const std::uint8_t proto = ip.u8();
    ip.skip(2);
    rec.src_ip = Ipv4{ip.u32()};
    rec.dst_ip = Ipv4{ip.u32()};
    if (ip.failed() || ihl < kIpv4HeaderSize || total_len < ihl) return FrameResult::malformed;
    if ((frag & 0x3fff) != 0) return FrameResult::fragment;
    if (proto != static_cast<std::uint8_t>(Proto::tcp) && proto != static_cast<std::uint8_t>(Proto::udp)) {
        return FrameResult::non_tcp_udp;
    }
    rec.proto = static_cast<Proto>(proto);

    // Snaplen may cut the datagram short; Ethernet padding may extend it.
    const std::size_t ip_avail = frame.size() - ip_start;
    const std::size_t ip_len = std::min<std::size_t>(total_len, ip_avail);
    if (ip_len < ihl) return FrameResult::malformed;
    ByteReader l4{frame.subspan(ip_start + ihl, ip_len - ihl)};
    rec.src_port = l4.u16();
    rec.dst_port = l4.u16();
    std::size_t l4_header = kUdpHeaderSize;
    if (rec.proto == Proto::tcp) {
        l4.skip(8);
        l4_header = std::size_t{static_cast<std::uint8_t>(l4.u8() >> 4)} * 4;
        if (l4_header < kTcpHeaderSize) return FrameResult::malformed;
    }
    if (l4.failed() || l4_header > ip_len - ihl) return FrameResult::malformed;
    auto payload = frame.subspan(ip_start + ihl + l4_header, ip_len - ihl - l4_header);
    rec.payload.assign(payload.begin(), payload.end());
    return FrameResult::ok;
}

std::uint32_t checksum_add(std::uint32_t sum, std::span<const std::uint8_t> data) {
    for (std::size_t i = 0; i + 1 < data.size(); i += 2) sum += (std::uint32_t{data[i]} << 8) | data[i + 1];
    if (data.size() % 2 == 1) sum += std::uint32_t{data.back()} << 8;
    return sum;
}

std::uint16_t checksum_fold(std::uint32_t sum) {
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum & 0xffff);
}

std::vector<std::uint8_t> encode_frame(const PacketRecord& rec) {
    ByteWriter w;
    // Locally administered MACs: device side 02:00:00:00:00:01, gateway :02.
    static constexpr std::uint8_t kMacA[6] = {0x02, 0, 0, 0, 0, 0x01};
    static constexpr std::uint8_t kMacB[6] = {0x02, 0, 0, 0, 0, 0x02};
    const bool a_to_b = rec.src_ip <= rec.dst_ip;
    w.bytes(a_to_b ? kMacB : kMacA);
    w.bytes(a_to_b ? kMacA : kMacB);
    w.u16(kEtherIpv4);

    const std::size_t l4_size = (rec.proto == Proto::tcp ? kTcpHeaderSize : kUdpHeaderSize) + rec.payload.size();
    const std::size_t ip_start = w.size();
    w.u8(0x45);
    w.u8(0);
    w.u16(static_cast<std::uint16_t>(kIpv4HeaderSize + l4_size));
    w.u16(0);
    w.u16(0x4000);  // DF
    w.u8(64);
    w.u8(static_cast<std::uint8_t>(rec.proto));
    w.u16(0);
    w.u32(rec.src_ip.value);
    w.u32(rec.dst_ip.value);
    w.patch(ip_start + 10,
            checksum_fold(checksum_add(0, std::span{w.data()}.subspan(ip_start, kIpv4HeaderSize))), 2);

    const std::size_t l4_start = w.size();
    w.u16(rec.src_port);
    w.u16(rec.dst_port);
    if (rec.proto == Proto::tcp) {
        w.u32(1);  // seq
        w.u32(1);  // ack
        w.u8(0x50);
        w.u8(0x18);  // PSH|ACK
        w.u16(65535);
        w.u16(0);
        w.u16(0);
    } else {
        w.u16(static_cast<std::uint16_t>(l4_size));
        w.u16(0);
    }
    w.bytes(rec.payload);

    std::uint32_t sum = 0;
    sum += rec.src_ip.value >> 16;
    sum += rec.src_ip.value & 0xffff;
    sum += rec.dst_ip.value >> 16;
    sum += rec.dst_ip.value & 0xffff;
    sum += static_cast<std::uint8_t>(rec.proto);
    sum += static_cast<std::uint32_t>(l4_size);
    sum = checksum_add(sum, std::span{w.data()}.subspan(l4_start));
    std::uint16_t ck = checksum_fold(sum);
    if (rec.proto == Proto::udp && ck == 0) ck = 0xffff;
    w.patch(l4_start + (rec.proto == Proto::tcp ? 16 : 6), ck, 2);
    return w.take();
}

}  // namespace

PcapContents read_pcap(std::span<const std::uint8_t> bytes) {
    ByteReader r{bytes};
    const std::uint32_t magic = r.u32();
    if (r.failed()) throw TruncatedFile{"pcap global header truncated"};
    if (magic == kSwappedMagic) {
        r.set_big_endian(false);
    } else if (magic != kPcapMagic) {
        throw BadMagic{fmt::format("not a classic pcap file (magic {:#010x})", magic)};
    }
    r.skip(16);  // version, thiszone, sigfigs, snaplen
    const std::uint32_t link_type = r.u32();
    if (r.failed()) throw TruncatedFile{"pcap global header truncated"};
    if (link_type != kLinkTypeEthernet) {
        throw UnsupportedLinkType{fmt::format("unsupported pcap link type {}", link_type)};
    }

    PcapContents out;
    std::size_t index = 0;
    while (r.remaining() > 0) {
        if (r.remaining() < kPcapRecordHeaderSize) {
            throw TruncatedFile{fmt::format("record {} header exceeds remaining {} bytes", index, r.remaining())};
        }
        PacketRecord rec;
        rec.ts_sec = r.u32();
        rec.ts_usec = r.u32();
        const std::uint32_t incl_len = r.u32();
        rec.orig_len = r.u32();
        if (incl_len > r.remaining()) {
            throw TruncatedFile{fmt::format("record {} claims {} bytes, {} remain", index, incl_len, r.remaining())};
        }
        auto frame = r.bytes(incl_len);
        ++index;
        if (rec.ts_usec >= 1'000'000) {
            ++out.skipped.malformed;
            continue;
        }
        switch (decode_frame(frame, rec)) {
            case FrameResult::ok:
                rec.link_frame.assign(frame.begin(), frame.end());
                out.packets.push_back(std::move(rec));
                break;
            case FrameResult::vlan: ++out.skipped.vlan; break;
            case FrameResult::ipv6: ++out.skipped.ipv6; break;
            case FrameResult::non_ipv4: ++out.skipped.non_ipv4; break;
            case FrameResult::non_tcp_udp: ++out.skipped.non_tcp_udp; break;
            case FrameResult::fragment: ++out.skipped.fragments; break;
            case FrameResult::malformed: ++out.skipped.malformed; break;
        }
    }
    return out;
}

std::vector<std::uint8_t> write_pcap(std::span<const PacketRecord> packets) {
    ByteWriter w;
    w.u32(kPcapMagic);
    w.u16(2);
    w.u16(4);
    w.u32(0);
    w.u32(0);
    w.u32(kMaxSnaplen);
    w.u32(kLinkTypeEthernet);
    for (const auto& p : packets) {
        std::vector<std::uint8_t> synthesized;
        std::span<const std::uint8_t> frame = p.link_frame;
        if (frame.empty()) {
            synthesized = encode_frame(p);
            frame = synthesized;
        }
        w.u32(p.ts_sec);
        w.u32(p.ts_usec);
        w.u32(static_cast<std::uint32_t>(frame.size()));
        w.u32(std::max<std::uint32_t>(p.orig_len, static_cast<std::uint32_t>(frame.size())));
        w.bytes(frame);
    }
    return w.take();
}

PacketRecord make_packet(std::uint64_t ts_micros, Endpoint src, Endpoint dst, Proto proto,
                         std::vector<std::uint8_t> payload) {
    PacketRecord rec;
    rec.ts_sec = static_cast<std::uint32_t>(ts_micros / 1'000'000);
    rec.ts_usec = static_cast<std::uint32_t>(ts_micros % 1'000'000);
    rec.src_ip = src.ip;
    rec.dst_ip = dst.ip;
    rec.src_port = src.port;
    rec.dst_port = dst.port;
    rec.proto = proto;
    rec.payload = std::move(payload);
    rec.link_frame = encode_frame(rec);
    rec.orig_len = static_cast<std::uint32_t>(rec.link_frame.size());
    return rec;
}

}  // namespace trafprof
