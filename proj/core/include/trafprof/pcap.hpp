#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trafprof/net.hpp"

namespace trafprof {

/// One IPv4 TCP/UDP packet as read from a capture.
struct PacketRecord {
    std::uint32_t ts_sec = 0;
    std::uint32_t ts_usec = 0;  ///< always < 1'000'000
    Ipv4 src_ip;
    Ipv4 dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Proto proto = Proto::tcp;
    std::vector<std::uint8_t> payload;     ///< transport payload
    std::vector<std::uint8_t> link_frame;  ///< raw captured Ethernet frame
    std::uint32_t orig_len = 0;            ///< length on the wire

    std::size_t payload_len() const { return payload.size(); }
    /// Size used for traffic features: the frame length on the wire.
    std::uint32_t wire_size() const { return orig_len; }
    std::uint64_t ts_micros() const { return std::uint64_t{ts_sec} * 1'000'000 + ts_usec; }
    FlowKey flow_key() const { return FlowKey::of({src_ip, src_port}, {dst_ip, dst_port}, proto); }

    bool operator==(const PacketRecord&) const = default;
};

/// Frames dropped by read_pcap, by reason.
struct SkipCounters {
    std::size_t vlan = 0;
    std::size_t ipv6 = 0;
    std::size_t non_ipv4 = 0;
    std::size_t non_tcp_udp = 0;
    std::size_t fragments = 0;
    std::size_t malformed = 0;

    std::size_t total() const { return vlan + ipv6 + non_ipv4 + non_tcp_udp + fragments + malformed; }
    SkipCounters& operator+=(const SkipCounters& o);
};

struct PcapContents {
    std::vector<PacketRecord> packets;
    SkipCounters skipped;
};

inline constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;
inline constexpr std::size_t kPcapGlobalHeaderSize = 24;
inline constexpr std::size_t kPcapRecordHeaderSize = 16;
inline constexpr std::size_t kEthernetHeaderSize = 14;
inline constexpr std::size_t kIpv4HeaderSize = 20;
inline constexpr std::size_t kTcpHeaderSize = 20;
inline constexpr std::size_t kUdpHeaderSize = 8;

/// Parses a classic libpcap file in either byte order. Throws BadMagic,
/// UnsupportedLinkType or TruncatedFile.
PcapContents read_pcap(std::span<const std::uint8_t> bytes);

/// Serializes packets as a big-endian classic pcap. Records with an empty
/// link_frame get one synthesized from their header fields.
std::vector<std::uint8_t> write_pcap(std::span<const PacketRecord> packets);

/// Builds a complete record (Ethernet + IPv4 + TCP/UDP, valid checksums).
PacketRecord make_packet(std::uint64_t ts_micros, Endpoint src, Endpoint dst, Proto proto,
                         std::vector<std::uint8_t> payload);

/// Header overhead of a frame built by make_packet.
constexpr std::size_t frame_overhead(Proto proto) {
    return kEthernetHeaderSize + kIpv4HeaderSize + (proto == Proto::tcp ? kTcpHeaderSize : kUdpHeaderSize);
}

}  // namespace trafprof
