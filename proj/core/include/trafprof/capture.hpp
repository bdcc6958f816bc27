#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafprof/net.hpp"
#include "trafprof/pcap.hpp"

namespace trafprof {

/// All packets of one bidirectional transport conversation.
struct Stream {
    FlowKey key;
    Ipv4 device_ip;
    std::vector<PacketRecord> packets;  ///< by timestamp, ties in capture order
    std::optional<std::string> host;
    std::optional<std::string> app_label;
    std::optional<std::string> activity_label;

    /// No endpoint is the device, so direction is undefined.
    bool foreign() const { return !key.involves(device_ip); }
    /// The non-device endpoint (the server, for client-side captures).
    Endpoint remote() const { return key.lo.ip == device_ip ? key.hi : key.lo; }
    bool is_dns() const { return key.proto == Proto::udp && (key.lo.port == 53 || key.hi.port == 53); }
};

/// Groups packets by FlowKey. Streams are ordered by first-packet timestamp
/// (then key); packets within a stream are stably sorted by timestamp.
std::vector<Stream> assemble_streams(std::span<const PacketRecord> packets, Ipv4 device_ip);

/// First SNI host name found in a TCP payload of the stream.
std::optional<std::string> extract_sni(const Stream& stream);

struct DnsMap {
    std::map<Ipv4, std::string> hosts;
    std::size_t responses = 0;
    std::size_t malformed = 0;
};

/// Maps A-record answer addresses to query names from UDP port-53 responses.
/// Later answers overwrite earlier ones.
DnsMap build_dns_map(std::span<const PacketRecord> packets);

/// SNI if present, else the DNS name of the remote endpoint. The result is
/// also stored in stream.host.
std::optional<std::string> label_host(Stream& stream, const std::map<Ipv4, std::string>& dns_hosts);

/// Per-packet view used for feature extraction and the stream export.
struct PacketSummary {
    std::uint32_t ts_sec = 0;
    std::uint32_t ts_usec = 0;
    bool outgoing = false;  ///< sent by the device
    std::uint32_t size = 0;  ///< frame length on the wire

    std::uint64_t ts_micros() const { return std::uint64_t{ts_sec} * 1'000'000 + ts_usec; }
    bool operator==(const PacketSummary&) const = default;
};

/// A stream as exported by ingest: one JSON object per line.
struct StreamRecord {
    std::string key;
    std::string pcap;
    std::optional<std::string> host;
    std::optional<std::string> app_label;
    std::optional<std::string> activity_label;
    std::vector<PacketSummary> packets;

    bool operator==(const StreamRecord&) const = default;
};

StreamRecord summarize(const Stream& stream, std::string pcap_name = {});

std::string to_json_line(const StreamRecord& rec);
/// Throws DataError on malformed lines.
StreamRecord parse_stream_line(const std::string& line);

struct IngestReport {
    std::size_t packets = 0;
    SkipCounters skipped;
    std::size_t streams = 0;
    std::size_t foreign_streams = 0;
    std::size_t dns_streams = 0;
    std::size_t labeled_by_sni = 0;
    std::size_t labeled_by_dns = 0;
    std::size_t unlabeled = 0;
    std::size_t malformed_dns = 0;

    IngestReport& operator+=(const IngestReport& o);
};

/// Full capture pipeline for one pcap: assemble, host-label, and keep the
/// streams eligible for feature extraction (not foreign, not DNS service).
std::vector<Stream> ingest_capture(const PcapContents& capture, Ipv4 device_ip, IngestReport& report);

}  // namespace trafprof
