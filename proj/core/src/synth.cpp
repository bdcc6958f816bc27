#include "trafprof/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "trafprof/dns.hpp"
#include "trafprof/error.hpp"
#include "trafprof/tls.hpp"

namespace trafprof {

namespace {

constexpr std::uint16_t kTlsPort = 443;
constexpr std::uint16_t kDnsPort = 53;
constexpr std::uint64_t kDnsAnswerDelay = 800;   ///< microseconds after the query
constexpr std::uint64_t kHelloDelay = 2000;      ///< microseconds after the query
constexpr std::size_t kTlsRecordHeader = 5;

bool is_probability(double p) {
    return p >= 0.0 && p <= 1.0;
}

}  // namespace

int LengthModel::draw(Rng& rng) const {
    int extra = 0;
    if (p < 1.0) extra = std::geometric_distribution<int>{p}(rng);
    return static_cast<int>(std::min<long>(static_cast<long>(min_len) + extra, max_len));
}

double SizeModel::draw_raw(Rng& rng) const {
    if (sigma == 0.0) return std::exp(mu);
    return std::lognormal_distribution<double>{mu, sigma}(rng);
}

std::uint32_t SizeModel::draw(Rng& rng) const {
    const double s = std::round(draw_raw(rng));
    return static_cast<std::uint32_t>(std::clamp(s, double{kMinFrameSize}, double{kMaxFrameSize}));
}

std::uint64_t GapModel::draw_micros(Rng& rng) const {
    const double seconds = constant ? 1.0 / rate : std::exponential_distribution<double>{rate}(rng);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(seconds * 1e6)));
}

double DirectionModel::stationary_out() const {
    const double leave_out = 1.0 - stay_out;
    const double leave_in = 1.0 - stay_in;
    if (leave_out + leave_in == 0.0) return 0.5;
    return leave_in / (leave_out + leave_in);
}

void ClassProfile::validate() const {
    const auto where = app + "/" + activity;
    if (!tls::is_valid_hostname(hostname)) throw BadConfig{fmt::format("{}: invalid host name '{}'", where, hostname)};
    if (length.min_len < 0 || length.max_len < length.min_len) throw BadConfig{where + ": bad stream length bounds"};
    if (!(length.p > 0.0) || length.p > 1.0) throw BadConfig{where + ": length p must lie in (0, 1]"};
    for (const auto* s : {&out_size, &in_size}) {
        if (!std::isfinite(s->mu) || !(s->sigma >= 0.0) || !std::isfinite(s->sigma)) {
            throw BadConfig{where + ": size model needs finite mu and sigma >= 0"};
        }
    }
    if (!(gap.rate > 0.0) || !std::isfinite(gap.rate)) throw BadConfig{where + ": gap rate must be positive"};
    if (!is_probability(direction.stay_out) || !is_probability(direction.stay_in)) {
        throw BadConfig{where + ": direction probabilities must lie in [0, 1]"};
    }
}

GeneratedStream gen_stream(const ClassProfile& profile, const StreamEndpoints& at, Rng& rng) {
    GeneratedStream out;
    const Endpoint client{at.device, at.client_port};
    const Endpoint server{at.server, kTlsPort};
    const Endpoint dns_client{at.device, at.dns_port};
    const Endpoint dns_server{at.dns_server, kDnsPort};
    out.key = FlowKey::of(client, server, Proto::tcp);

    std::uint64_t t = at.start_micros;
    out.packets.push_back(make_packet(t, dns_client, dns_server, Proto::udp, dns::build_query(at.dns_id, profile.hostname)));
    const Ipv4 answer[] = {at.server};
    out.packets.push_back(make_packet(t + kDnsAnswerDelay, dns_server, dns_client, Proto::udp,
                                      dns::build_response(at.dns_id, profile.hostname, answer)));
    t += kHelloDelay;
    tls::ClientHelloOptions hello;
    if (profile.sni) hello.server_name = profile.hostname;
    out.packets.push_back(make_packet(t, client, server, Proto::tcp, tls::build_client_hello(hello)));

    const int n = profile.length.draw(rng);
    std::bernoulli_distribution first_out{profile.direction.stationary_out()};
    bool outgoing = first_out(rng);
    const std::size_t overhead = frame_overhead(Proto::tcp) + kTlsRecordHeader;
    for (int k = 0; k < n; ++k) {
        if (k > 0) {
            const double stay = outgoing ? profile.direction.stay_out : profile.direction.stay_in;
            if (!std::bernoulli_distribution{stay}(rng)) outgoing = !outgoing;
        }
        t += profile.gap.draw_micros(rng);
        const auto size = (outgoing ? profile.out_size : profile.in_size).draw(rng);
        auto payload = tls::build_application_data(size - overhead);
        out.packets.push_back(outgoing ? make_packet(t, client, server, Proto::tcp, std::move(payload))
                                       : make_packet(t, server, client, Proto::tcp, std::move(payload)));
    }
    out.data_packets = static_cast<std::size_t>(n);
    return out;
}

int ClassSpec::scaled_count(double global_scale) const {
    return static_cast<int>(std::llround(static_cast<double>(count) * scale * global_scale));
}

namespace {

ClassProfile profile(std::string app, std::string activity, std::string host, bool sni, LengthModel len, SizeModel out,
                     SizeModel in, GapModel gap, DirectionModel dir) {
    return {std::move(app), std::move(activity), std::move(host), sni, len, out, in, gap, dir};
}

ClassSpec single(int count, ClassProfile p) {
    ClassSpec s{p.app, p.activity, count, 1.0, {1.0}, {}};
    s.components.push_back(std::move(p));
    return s;
}

}  // namespace

SynthConfig default_synth_config() {
    SynthConfig c;
    // Sizes are log-bytes of whole frames: ln 100 = 4.6, ln 400 = 6.0, ln 1400 = 7.24.
    c.classes.push_back(single(237, profile("facebook", "post_text", "graph.facebook.com", true, {20, 0.05, 400},
                                            {5.0, 0.2}, {6.2, 0.2}, {40.0}, {0.6, 0.6})));
    c.classes.push_back(single(423, profile("facebook", "post_image", "upload.facebook.com", true, {60, 0.03, 600},
                                            {7.2, 0.08}, {5.4, 0.2}, {120.0}, {0.85, 0.4})));
    c.classes.push_back(single(102, profile("youtube", "play_video", "rr3---sn-video.googlevideo.com", true,
                                            {150, 0.02, 1200}, {4.3, 0.15}, {7.22, 0.03}, {250.0}, {0.3, 0.92})));
    c.classes.push_back(single(129, profile("youtube", "comment", "www.youtube.com", true, {25, 0.08, 400},
                                            {5.8, 0.2}, {6.7, 0.2}, {30.0}, {0.5, 0.7})));
    c.classes.push_back(single(83, profile("whatsapp", "send_message", "e1.whatsapp.net", false, {8, 0.2, 200},
                                           {4.9, 0.15}, {4.4, 0.15}, {10.0}, {0.5, 0.5})));
    c.classes.push_back(single(203, profile("whatsapp", "send_image", "mmg.whatsapp.net", false, {40, 0.05, 600},
                                            {6.7, 0.12}, {4.3, 0.15}, {80.0}, {0.85, 0.3})));
    c.classes.push_back(single(81, profile("gmail", "mail", "mail.google.com", true, {30, 0.07, 400}, {6.3, 0.2},
                                           {6.9, 0.15}, {25.0}, {0.6, 0.6})));

    ClassSpec background{"impertinent", "none", 7068, 1.0, {0.35, 0.25, 0.25, 0.15}, {}};
    background.components.push_back(profile("impertinent", "none", "clients4.google.com", true, {4, 0.3, 100},
                                             {4.15, 0.05}, {4.15, 0.05}, {2.0}, {0.3, 0.3}));
    background.components.push_back(profile("impertinent", "none", "api.weather.example.com", true, {10, 0.15, 200},
                                            {5.5, 0.1}, {7.0, 0.05}, {5.0}, {0.2, 0.6}));
    background.components.push_back(profile("impertinent", "none", "connectivity.android.example.net", true,
                                            {2, 0.5, 50}, {5.2, 0.05}, {5.9, 0.05}, {1.0}, {0.2, 0.2}));
    background.components.push_back(profile("impertinent", "none", "push.notify.example.org", true, {6, 0.2, 100},
                                            {6.9, 0.05}, {6.9, 0.05}, {3.0}, {0.4, 0.4}));
    c.classes.push_back(std::move(background));
    return c;
}

namespace {

std::string class_prefix(const ClassSpec& s) {
    return fmt::format("class.{}.{}.", s.app, s.activity);
}

void apply_profile_kv(const KvConfig& kv, const std::string& prefix, ClassProfile& p) {
    if (auto v = kv.get_string(prefix + "host")) p.hostname = *v;
    if (auto v = kv.get_bool(prefix + "sni")) p.sni = *v;
    if (auto v = kv.get_doubles(prefix + "length")) {
        if (v->size() != 3) throw BadConfig{prefix + "length needs 'min p max'"};
        p.length = {static_cast<int>((*v)[0]), (*v)[1], static_cast<int>((*v)[2])};
    }
    for (auto [key, model] : {std::pair{"out_size", &p.out_size}, std::pair{"in_size", &p.in_size}}) {
        if (auto v = kv.get_doubles(prefix + key)) {
            if (v->size() != 2) throw BadConfig{prefix + key + " needs 'mu sigma'"};
            *model = {(*v)[0], (*v)[1]};
        }
    }
    if (auto v = kv.get_words(prefix + "gap")) {
        if (v->empty() || v->size() > 2 || (v->size() == 2 && (*v)[1] != "exp" && (*v)[1] != "const")) {
            throw BadConfig{prefix + "gap needs 'rate [exp|const]'"};
        }
        try {
            p.gap = {std::stod((*v)[0]), v->size() == 2 && (*v)[1] == "const"};
        } catch (const std::exception&) {
            throw BadConfig{prefix + "gap rate is not a number"};
        }
    }
    if (auto v = kv.get_doubles(prefix + "direction")) {
        if (v->size() != 2) throw BadConfig{prefix + "direction needs 'stay_out stay_in'"};
        p.direction = {(*v)[0], (*v)[1]};
    }
}

void put_profile_kv(KvConfig& kv, const std::string& prefix, const ClassProfile& p) {
    kv.set(prefix + "host", p.hostname);
    kv.set(prefix + "sni", p.sni ? "true" : "false");
    kv.set(prefix + "length", fmt::format("{} {} {}", p.length.min_len, p.length.p, p.length.max_len));
    kv.set(prefix + "out_size", fmt::format("{} {}", p.out_size.mu, p.out_size.sigma));
    kv.set(prefix + "in_size", fmt::format("{} {}", p.in_size.mu, p.in_size.sigma));
    kv.set(prefix + "gap", fmt::format("{} {}", p.gap.rate, p.gap.constant ? "const" : "exp"));
    kv.set(prefix + "direction", fmt::format("{} {}", p.direction.stay_out, p.direction.stay_in));
}

}  // namespace

SynthConfig synth_config_from_kv(const KvConfig& kv, SynthConfig c) {
    c.seed = kv.get_u64("synth.seed", kv.get_u64("seed", c.seed));
    c.scale = kv.get_double("synth.scale", c.scale);
    if (auto v = kv.get_string("synth.device_ip")) {
        const auto ip = Ipv4::parse(*v);
        if (!ip) throw BadConfig{"synth.device_ip is not an IPv4 address"};
        c.device_ip = *ip;
    }
    if (auto v = kv.get_string("synth.dns_server")) {
        const auto ip = Ipv4::parse(*v);
        if (!ip) throw BadConfig{"synth.dns_server is not an IPv4 address"};
        c.dns_server = *ip;
    }
    c.start_time = kv.get_u64("synth.start_time", c.start_time);
    c.stream_spacing = kv.get_double("synth.stream_spacing", c.stream_spacing);
    c.max_streams_per_pcap = kv.get_u64("synth.max_streams_per_pcap", c.max_streams_per_pcap);
    if (!(c.scale >= 0.0) || !std::isfinite(c.scale)) throw BadConfig{"synth.scale must be >= 0"};
    if (!(c.stream_spacing > 0.0)) throw BadConfig{"synth.stream_spacing must be positive"};
    if (c.max_streams_per_pcap < 1 || c.max_streams_per_pcap > 40000) {
        throw BadConfig{"synth.max_streams_per_pcap must lie in [1, 40000]"};
    }

    for (auto& s : c.classes) {
        const auto prefix = class_prefix(s);
        s.count = static_cast<int>(kv.get_int(prefix + "count", s.count));
        s.scale = kv.get_double(prefix + "scale", s.scale);
        if (s.count < 0 || !(s.scale >= 0.0)) throw BadConfig{prefix + "count and scale must be >= 0"};
        if (s.components.size() == 1) {
            apply_profile_kv(kv, prefix, s.components[0]);
        } else {
            if (auto w = kv.get_doubles(prefix + "weights")) {
                if (w->size() != s.components.size()) throw BadConfig{prefix + "weights has the wrong length"};
                s.weights = *w;
            }
            for (std::size_t k = 0; k < s.components.size(); ++k) {
                apply_profile_kv(kv, fmt::format("{}{}.", prefix, k), s.components[k]);
            }
        }
        double total = 0.0;
        for (double w : s.weights) {
            if (!(w >= 0.0)) throw BadConfig{prefix + "weights must be >= 0"};
            total += w;
        }
        if (!(total > 0.0)) throw BadConfig{prefix + "weights must not all be zero"};
        for (const auto& p : s.components) p.validate();
    }
    for (const auto& key : kv.unused_keys()) {
        if (key.rfind("class.", 0) == 0) throw BadConfig{fmt::format("unknown class setting '{}'", key)};
    }
    return c;
}

KvConfig synth_config_to_kv(const SynthConfig& c) {
    KvConfig kv;
    kv.set("synth.seed", std::to_string(c.seed));
    kv.set("synth.scale", fmt::format("{}", c.scale));
    kv.set("synth.device_ip", c.device_ip.to_string());
    kv.set("synth.dns_server", c.dns_server.to_string());
    kv.set("synth.start_time", std::to_string(c.start_time));
    kv.set("synth.stream_spacing", fmt::format("{}", c.stream_spacing));
    kv.set("synth.max_streams_per_pcap", std::to_string(c.max_streams_per_pcap));
    for (const auto& s : c.classes) {
        const auto prefix = class_prefix(s);
        kv.set(prefix + "count", std::to_string(s.count));
        kv.set(prefix + "scale", fmt::format("{}", s.scale));
        if (s.components.size() == 1) {
            put_profile_kv(kv, prefix, s.components[0]);
        } else {
            kv.set(prefix + "weights", fmt::format("{}", fmt::join(s.weights, " ")));
            for (std::size_t k = 0; k < s.components.size(); ++k) {
                put_profile_kv(kv, fmt::format("{}{}.", prefix, k), s.components[k]);
            }
        }
    }
    return kv;
}

SynthDataset gen_dataset(const SynthConfig& cfg) {
    // One server address per distinct host name, in order of first use.
    std::map<std::string, Ipv4> servers;
    constexpr Ipv4 kServerBase{100, 64, 0, 0};
    for (const auto& s : cfg.classes) {
        for (const auto& p : s.components) {
            p.validate();
            if (!servers.count(p.hostname)) {
                servers.emplace(p.hostname, Ipv4{kServerBase.value + static_cast<std::uint32_t>(servers.size()) + 1});
            }
        }
    }

    SynthDataset out;
    for (const auto& s : cfg.classes) {
        const int n = s.scaled_count(cfg.scale);
        out.class_counts[s.app + "/" + s.activity] = n;
        if (n == 0) continue;
        const std::size_t per_file = cfg.max_streams_per_pcap;
        const std::size_t parts = (static_cast<std::size_t>(n) + per_file - 1) / per_file;
        for (std::size_t part = 0; part < parts; ++part) {
            SynthFile file;
            file.name = parts == 1 ? fmt::format("{}_{}.pcap", s.app, s.activity)
                                   : fmt::format("{}_{}-{}.pcap", s.app, s.activity, part);
            std::vector<PacketRecord> packets;
            const std::size_t first = part * per_file;
            const std::size_t last = std::min(first + per_file, static_cast<std::size_t>(n));
            for (std::size_t i = first; i < last; ++i) {
                Rng rng = make_rng(cfg.seed, fmt::format("synth/{}/{}/{}", s.app, s.activity, i));
                std::discrete_distribution<std::size_t> pick{s.weights.begin(), s.weights.end()};
                const auto& profile = s.components[pick(rng)];
                const std::size_t slot = i - first;
                StreamEndpoints at;
                at.device = cfg.device_ip;
                at.dns_server = cfg.dns_server;
                at.server = servers.at(profile.hostname);
                at.client_port = static_cast<std::uint16_t>(20000 + slot);
                at.dns_port = at.client_port;
                at.dns_id = static_cast<std::uint16_t>(i & 0xffff);
                at.start_micros = cfg.start_time * 1'000'000 +
                                  static_cast<std::uint64_t>(std::llround(static_cast<double>(slot) * cfg.stream_spacing * 1e6));
                auto stream = gen_stream(profile, at, rng);
                out.labels.push_back({file.name, stream.key.to_string(), s.app, s.activity});
                std::move(stream.packets.begin(), stream.packets.end(), std::back_inserter(packets));
            }
            std::stable_sort(packets.begin(), packets.end(),
                             [](const PacketRecord& a, const PacketRecord& b) { return a.ts_micros() < b.ts_micros(); });
            file.bytes = write_pcap(packets);
            out.pcaps.push_back(std::move(file));
        }
    }
    return out;
}

void PopulationProfile::validate() const {
    if (groups.empty()) throw BadConfig{"population has no groups"};
    if (users < 0) throw BadConfig{"population user count must be >= 0"};
    for (const auto& g : groups) {
        if (!(g.weight >= 0.0)) throw BadConfig{"group weights must be >= 0"};
        for (const auto& [trait, labels] : traits) {
            auto it = g.traits.find(trait);
            if (it == g.traits.end() || std::find(labels.begin(), labels.end(), it->second) == labels.end()) {
                throw BadConfig{"population group lacks a valid label for trait " + trait};
            }
        }
        double total = 0.0;
        for (const auto& [event, p] : g.mixture) {
            if (!(p >= 0.0)) throw BadConfig{"mixture weights must be >= 0"};
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw BadConfig{"population mixture weights must sum to 1"};
    }
}

UserCorpus gen_users(const PopulationProfile& population, int streams_per_user, std::uint64_t seed) {
    population.validate();
    if (streams_per_user < 0) throw BadConfig{"streams per user must be >= 0"};
    std::vector<double> group_weights;
    for (const auto& g : population.groups) group_weights.push_back(g.weight);

    UserCorpus out;
    Rng group_rng = make_rng(seed, "users/groups");
    std::discrete_distribution<std::size_t> pick_group{group_weights.begin(), group_weights.end()};
    for (int u = 0; u < population.users; ++u) {
        const auto user = fmt::format("user{:04}", u);
        const auto& g = population.groups[pick_group(group_rng)];
        out.truth[user] = g.traits;
        std::vector<double> w;
        for (const auto& [event, p] : g.mixture) w.push_back(p);
        std::discrete_distribution<std::size_t> pick_event{w.begin(), w.end()};
        Rng rng = make_rng(seed, "users/events/" + user);
        for (int k = 0; k < streams_per_user; ++k) {
            const auto& key = g.mixture[pick_event(rng)].first;
            const auto slash = key.find('/');
            out.events.push_back({user, static_cast<std::uint64_t>(k), key.substr(0, slash),
                                  slash == std::string::npos ? std::string{kNoActivity} : key.substr(slash + 1)});
        }
    }
    return out;
}

PopulationProfile default_population() {
    PopulationProfile p;
    p.traits = {{"persona", {"creator", "viewer", "worker"}}};
    p.users = 300;
    p.groups = {
        {{{"persona", "creator"}},
         1.0,
         {{"facebook/post_text", 0.25}, {"facebook/post_image", 0.3}, {"youtube/play_video", 0.1},
          {"whatsapp/send_image", 0.15}, {"gmail/mail", 0.05}, {"impertinent/none", 0.15}}},
        {{{"persona", "viewer"}},
         1.0,
         {{"youtube/play_video", 0.45}, {"youtube/comment", 0.15}, {"facebook/post_text", 0.05},
          {"whatsapp/send_message", 0.1}, {"gmail/mail", 0.05}, {"impertinent/none", 0.2}}},
        {{{"persona", "worker"}},
         1.0,
         {{"gmail/mail", 0.4}, {"whatsapp/send_message", 0.25}, {"youtube/play_video", 0.05},
          {"facebook/post_text", 0.05}, {"impertinent/none", 0.25}}},
    };
    return p;
}

PopulationProfile population_from_json(const nlohmann::json& j) {
    PopulationProfile p;
    p.traits = trait_config_from_json(j.at("traits"));
    p.users = j.at("users").get<int>();
    for (const auto& g : j.at("groups")) {
        PopulationGroup group{g.at("traits").get<std::map<std::string, std::string>>(), g.value("weight", 1.0), {}};
        for (const auto& m : g.at("mixture")) group.mixture.emplace_back(m.at(0).get<std::string>(), m.at(1).get<double>());
        p.groups.push_back(std::move(group));
    }
    p.validate();
    return p;
}

nlohmann::json population_to_json(const PopulationProfile& p) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : p.groups) {
        nlohmann::json mixture = nlohmann::json::array();
        for (const auto& [event, w] : g.mixture) mixture.push_back({event, w});
        groups.push_back({{"traits", g.traits}, {"weight", g.weight}, {"mixture", std::move(mixture)}});
    }
    return {{"traits", trait_config_to_json(p.traits)}, {"users", p.users}, {"groups", std::move(groups)}};
}

}  // namespace trafprof
