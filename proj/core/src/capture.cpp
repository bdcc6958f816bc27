#include "trafprof/capture.hpp"

#include <algorithm>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "trafprof/dns.hpp"
#include "trafprof/error.hpp"
#include "trafprof/tls.hpp"

namespace trafprof {

std::vector<Stream> assemble_streams(std::span<const PacketRecord> packets, Ipv4 device_ip) {
    std::vector<Stream> streams;
    std::unordered_map<FlowKey, std::size_t> index;
    for (const auto& p : packets) {
        const FlowKey key = p.flow_key();
        auto [it, inserted] = index.try_emplace(key, streams.size());
        if (inserted) {
            Stream s;
            s.key = key;
            s.device_ip = device_ip;
            streams.push_back(std::move(s));
        }
        streams[it->second].packets.push_back(p);
    }
    for (auto& s : streams) {
        std::stable_sort(s.packets.begin(), s.packets.end(),
                         [](const PacketRecord& a, const PacketRecord& b) { return a.ts_micros() < b.ts_micros(); });
    }
    std::sort(streams.begin(), streams.end(), [](const Stream& a, const Stream& b) {
        const auto ta = a.packets.front().ts_micros();
        const auto tb = b.packets.front().ts_micros();
        return ta != tb ? ta < tb : a.key < b.key;
    });
    return streams;
}

std::optional<std::string> extract_sni(const Stream& stream) {
    if (stream.key.proto != Proto::tcp) return std::nullopt;
    for (const auto& p : stream.packets) {
        if (p.payload.empty() || p.payload[0] != tls::kContentHandshake) continue;
        if (auto host = tls::client_hello_sni(p.payload)) return host;
    }
    return std::nullopt;
}

DnsMap build_dns_map(std::span<const PacketRecord> packets) {
    DnsMap out;
    for (const auto& p : packets) {
        if (p.proto != Proto::udp || p.src_port != dns::kPort) continue;
        auto resp = dns::parse_response(p.payload);
        if (!resp) {
            ++out.malformed;
            continue;
        }
        ++out.responses;
        for (const auto& ip : resp->addresses) out.hosts[ip] = resp->query_name;
    }
    return out;
}

std::optional<std::string> label_host(Stream& stream, const std::map<Ipv4, std::string>& dns_hosts) {
    std::optional<std::string> host = extract_sni(stream);
    if (!host) {
        if (auto it = dns_hosts.find(stream.remote().ip); it != dns_hosts.end()) host = it->second;
    }
    stream.host = host;
    return host;
}

StreamRecord summarize(const Stream& stream, std::string pcap_name) {
    StreamRecord rec;
    rec.key = stream.key.to_string();
    rec.pcap = std::move(pcap_name);
    rec.host = stream.host;
    rec.app_label = stream.app_label;
    rec.activity_label = stream.activity_label;
    rec.packets.reserve(stream.packets.size());
    for (const auto& p : stream.packets) {
        rec.packets.push_back({p.ts_sec, p.ts_usec, p.src_ip == stream.device_ip, p.wire_size()});
    }
    return rec;
}

namespace {

nlohmann::json optional_json(const std::optional<std::string>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

std::string to_json_line(const StreamRecord& rec) {
    nlohmann::json packets = nlohmann::json::array();
    for (const auto& p : rec.packets) packets.push_back({p.ts_sec, p.ts_usec, p.outgoing ? 1 : 0, p.size});
    nlohmann::json j = {
        {"key", rec.key},
        {"pcap", rec.pcap},
        {"host", optional_json(rec.host)},
        {"app_label", optional_json(rec.app_label)},
        {"activity_label", optional_json(rec.activity_label)},
        {"packets", std::move(packets)},
    };
    return j.dump();
}

StreamRecord parse_stream_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        StreamRecord rec;
        rec.key = j.at("key").get<std::string>();
        rec.pcap = j.value("pcap", std::string{});
        rec.host = optional_string(j, "host");
        rec.app_label = optional_string(j, "app_label");
        rec.activity_label = optional_string(j, "activity_label");
        for (const auto& p : j.at("packets")) {
            if (!p.is_array() || p.size() != 4) throw DataError{"packet entry must be [ts_sec, ts_usec, direction, size]"};
            rec.packets.push_back({p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>(), p[2].get<int>() != 0,
                                   p[3].get<std::uint32_t>()});
        }
        return rec;
    } catch (const nlohmann::json::exception& e) {
        throw DataError{std::string{"malformed stream line: "} + e.what()};
    }
}

IngestReport& IngestReport::operator+=(const IngestReport& o) {
    packets += o.packets;
    skipped += o.skipped;
    streams += o.streams;
    foreign_streams += o.foreign_streams;
    dns_streams += o.dns_streams;
    labeled_by_sni += o.labeled_by_sni;
    labeled_by_dns += o.labeled_by_dns;
    unlabeled += o.unlabeled;
    malformed_dns += o.malformed_dns;
    return *this;
}

std::vector<Stream> ingest_capture(const PcapContents& capture, Ipv4 device_ip, IngestReport& report) {
    report.packets += capture.packets.size();
    report.skipped += capture.skipped;
    const DnsMap dns_map = build_dns_map(capture.packets);
    report.malformed_dns += dns_map.malformed;

    std::vector<Stream> kept;
    for (auto& s : assemble_streams(capture.packets, device_ip)) {
        if (s.foreign()) {
            ++report.foreign_streams;
            continue;
        }
        if (s.is_dns()) {
            ++report.dns_streams;
            continue;
        }
        const bool by_sni = extract_sni(s).has_value();
        if (label_host(s, dns_map.hosts)) {
            ++(by_sni ? report.labeled_by_sni : report.labeled_by_dns);
        } else {
            ++report.unlabeled;
        }
        ++report.streams;
        kept.push_back(std::move(s));
    }
    return kept;
}

}  // namespace trafprof
