#include "trafprof_cli/run_config.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "trafprof/error.hpp"

namespace trafprof::cli {

namespace {

int positive_int(const KvConfig& kv, const std::string& key, int fallback, int min = 1) {
    const auto v = kv.get_int(key, fallback);
    if (v < min || v > 100'000'000) throw BadConfig{fmt::format("{} must be at least {}, got {}", key, min, v)};
    return static_cast<int>(v);
}

double positive_double(const KvConfig& kv, const std::string& key, double fallback) {
    const double v = kv.get_double(key, fallback);
    if (!(v > 0.0)) throw BadConfig{fmt::format("{} must be positive, got {}", key, v)};
    return v;
}

double fraction(const KvConfig& kv, const std::string& key, double fallback) {
    const double v = kv.get_double(key, fallback);
    if (!(v >= 0.0 && v < 1.0)) throw BadConfig{fmt::format("{} must be in [0, 1), got {}", key, v)};
    return v;
}

}  // namespace

TrainConfig RunConfig::train_config() const {
    TrainConfig tc;
    tc.n_batches = n_batches;
    tc.batch_size = batch_size;
    tc.adam.lr = lr;
    tc.clip_norm = clip_norm;
    tc.seed = seed;
    return tc;
}

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys{
        "seed",
        "paths.data",
        "paths.model",
        "paths.out",
        "paths.traits",
        "paths.population",
        "prep.size_cap",
        "prep.delay_cap",
        "train.batches",
        "train.batch_size",
        "train.lr",
        "train.clip_norm",
        "train.hidden",
        "train.gate_depth",
        "train.tau",
        "train.test_fraction",
        "forest.app_estimators",
        "forest.app_depth",
        "forest.activity_estimators",
        "forest.activity_depth",
        "forest.max_features",
        "forest.threads",
        "svm.lambda",
        "svm.epochs",
        "users.count",
        "users.events",
        "profile.alpha",
        "profile.holdout",
        "ingest.device_ip",
        "synth.seed",
        "synth.scale",
        "synth.device_ip",
        "synth.dns_server",
        "synth.start_time",
        "synth.stream_spacing",
        "synth.max_streams_per_pcap",
    };
    return keys;
}

RunConfig run_config_from_kv(KvConfig kv) {
    const auto& known = known_config_keys();
    for (const auto& [key, value] : kv.values()) {
        if (key.rfind("class.", 0) == 0) continue;
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw BadConfig{fmt::format("unknown config key '{}'", key)};
        }
    }

    RunConfig c;
    c.seed = kv.get_u64("seed", c.seed);
    c.data_dir = kv.get_string("paths.data", "");
    c.model_dir = kv.get_string("paths.model", "");
    c.out_dir = kv.get_string("paths.out", "");
    c.traits = kv.get_string("paths.traits", "");
    c.population = kv.get_string("paths.population", "");

    c.prep.size_cap = positive_double(kv, "prep.size_cap", c.prep.size_cap);
    c.prep.delay_cap = positive_double(kv, "prep.delay_cap", c.prep.delay_cap);

    c.n_batches = positive_int(kv, "train.batches", c.n_batches, 0);
    c.batch_size = positive_int(kv, "train.batch_size", c.batch_size);
    c.lr = positive_double(kv, "train.lr", c.lr);
    c.clip_norm = positive_double(kv, "train.clip_norm", c.clip_norm);
    c.hidden = positive_int(kv, "train.hidden", c.hidden);
    c.gate_depth = positive_int(kv, "train.gate_depth", c.gate_depth);
    c.tau = kv.get_double("train.tau", c.tau);
    if (!(c.tau >= 0.0 && c.tau <= 1.0)) throw BadConfig{"train.tau must be in [0, 1]"};
    c.test_fraction = fraction(kv, "train.test_fraction", c.test_fraction);

    auto& b = c.baseline;
    b.app_forest.n_estimators = positive_int(kv, "forest.app_estimators", b.app_forest.n_estimators);
    b.app_forest.max_depth = positive_int(kv, "forest.app_depth", b.app_forest.max_depth, 0);
    b.activity_forest.n_estimators = positive_int(kv, "forest.activity_estimators", b.activity_forest.n_estimators);
    b.activity_forest.max_depth = positive_int(kv, "forest.activity_depth", b.activity_forest.max_depth, 0);
    const int max_features = positive_int(kv, "forest.max_features", 0, 0);
    const int threads = positive_int(kv, "forest.threads", 1);
    b.app_forest.max_features = b.activity_forest.max_features = max_features;
    b.app_forest.threads = b.activity_forest.threads = threads;
    b.svm.lambda = positive_double(kv, "svm.lambda", b.svm.lambda);
    b.svm.epochs = positive_int(kv, "svm.epochs", b.svm.epochs);

    c.users = positive_int(kv, "users.count", 0, 0);
    c.events_per_user = positive_int(kv, "users.events", c.events_per_user, 0);
    c.alpha = positive_double(kv, "profile.alpha", c.alpha);
    c.holdout = fraction(kv, "profile.holdout", c.holdout);

    c.device_ip = kv.get_string("ingest.device_ip", kv.get_string("synth.device_ip", c.device_ip));
    c.kv = std::move(kv);
    return c;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
    return run_config_from_kv(path ? KvConfig::load(*path) : KvConfig{});
}

}  // namespace trafprof::cli
