#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trafprof/dataset.hpp"
#include "trafprof/kvconfig.hpp"
#include "trafprof/net.hpp"
#include "trafprof/pcap.hpp"
#include "trafprof/profiler.hpp"
#include "trafprof/rng.hpp"

namespace trafprof {

inline constexpr std::uint32_t kMaxFrameSize = 1514;
inline constexpr std::uint32_t kMinFrameSize = 60;

/// Data packet count: min_len plus a geometric number of failures with
/// success probability p, capped at max_len.
struct LengthModel {
    int min_len = 10;
    double p = 1.0;
    int max_len = 2048;

    int draw(Rng& rng) const;
    bool operator==(const LengthModel&) const = default;
};

/// Frame sizes exp(N(mu, sigma)), rounded, clamped to [60, 1514].
struct SizeModel {
    double mu = 6.0;
    double sigma = 0.2;

    /// The unrounded, unclamped log-normal draw.
    double draw_raw(Rng& rng) const;
    std::uint32_t draw(Rng& rng) const;
    bool operator==(const SizeModel&) const = default;
};

/// Exponential gaps with `rate` per second, or exactly 1 / rate when constant.
struct GapModel {
    double rate = 50.0;
    bool constant = false;

    /// Gap in whole microseconds, at least 1.
    std::uint64_t draw_micros(Rng& rng) const;
    bool operator==(const GapModel&) const = default;
};

/// Two-state Markov chain over packet direction; the first data packet is
/// drawn from the stationary distribution.
struct DirectionModel {
    double stay_out = 0.5;  ///< P(out -> out)
    double stay_in = 0.5;   ///< P(in -> in)

    double stationary_out() const;
    bool operator==(const DirectionModel&) const = default;
};

struct ClassProfile {
    std::string app;
    std::string activity;
    std::string hostname;
    bool sni = true;  ///< false suppresses SNI so only DNS can label the stream
    LengthModel length;
    SizeModel out_size;
    SizeModel in_size;
    GapModel gap;
    DirectionModel direction;

    /// Throws BadConfig when a parameter is out of range.
    void validate() const;
    bool operator==(const ClassProfile&) const = default;
};

/// Where one generated stream lives.
struct StreamEndpoints {
    Ipv4 device;
    Ipv4 dns_server;
    Ipv4 server;
    std::uint16_t client_port = 40000;
    std::uint16_t dns_port = 40000;
    std::uint16_t dns_id = 1;
    std::uint64_t start_micros = 0;
};

struct GeneratedStream {
    FlowKey key;  ///< the TCP stream carrying the labeled traffic
    std::vector<PacketRecord> packets;  ///< DNS query, DNS answer, ClientHello, data
    std::size_t data_packets = 0;
};

/// DNS query and answer for the host, a ClientHello (with SNI unless
/// suppressed), then data packets from the profile's distributions.
/// Timestamps strictly increase.
GeneratedStream gen_stream(const ClassProfile& profile, const StreamEndpoints& at, Rng& rng);

/// A dataset class: one or more weighted profile components (impertinent
/// traffic mixes several background hosts).
struct ClassSpec {
    std::string app;
    std::string activity;
    int count = 0;
    double scale = 1.0;
    std::vector<double> weights;
    std::vector<ClassProfile> components;

    int scaled_count(double global_scale) const;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    double scale = 1.0;
    Ipv4 device_ip{10, 0, 0, 2};
    Ipv4 dns_server{10, 0, 0, 1};
    std::uint64_t start_time = 1'700'000'000;  ///< seconds
    double stream_spacing = 2.0;               ///< seconds between stream starts
    std::size_t max_streams_per_pcap = 20000;
    std::vector<ClassSpec> classes;
};

/// Reference per-class stream counts with well-separated default profiles.
SynthConfig default_synth_config();

/// Applies `synth.*` and `class.<app>.<activity>.*` keys over `base`.
SynthConfig synth_config_from_kv(const KvConfig& kv, SynthConfig base = default_synth_config());
/// Every setting as key-value text, so a config can be dumped and reloaded.
KvConfig synth_config_to_kv(const SynthConfig& cfg);

struct SynthFile {
    std::string name;
    std::vector<std::uint8_t> bytes;
};

struct SynthDataset {
    std::vector<SynthFile> pcaps;
    std::vector<LabelEntry> labels;
    std::map<std::string, int> class_counts;  ///< "app/activity" -> streams
};

/// One pcap per class (split every max_streams_per_pcap streams). Stream i
/// of a class draws from substream "synth/<app>/<activity>/<i>".
SynthDataset gen_dataset(const SynthConfig& cfg);

/// Users of one trait combination and their (app, activity) usage mixture.
struct PopulationGroup {
    std::map<std::string, std::string> traits;
    double weight = 1.0;
    std::vector<std::pair<std::string, double>> mixture;  ///< "app/activity" -> probability
};

struct PopulationProfile {
    TraitConfig traits;
    std::vector<PopulationGroup> groups;
    int users = 100;

    void validate() const;
};

struct UserCorpus {
    std::vector<ProfileEvent> events;
    TraitTruth truth;
};

/// Each user joins a group with probability proportional to its weight
/// (which fixes the trait labels) and emits `streams_per_user` events drawn
/// from the group mixture.
UserCorpus gen_users(const PopulationProfile& population, int streams_per_user, std::uint64_t seed);

/// Three personas with clearly different usage, for profiling demos.
PopulationProfile default_population();
PopulationProfile population_from_json(const nlohmann::json& j);
nlohmann::json population_to_json(const PopulationProfile& p);

}  // namespace trafprof
