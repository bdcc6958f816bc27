#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trafprof/capture.hpp"
#include "trafprof/preprocess.hpp"

namespace trafprof {

/// Application classes and the activities recorded for each.
class Taxonomy {
public:
    struct App {
        std::string name;
        std::vector<std::string> activities;

        bool operator==(const App&) const = default;
    };

    Taxonomy() = default;
    explicit Taxonomy(std::vector<App> apps);

    /// facebook{post_text, post_image}, youtube{play_video, comment},
    /// whatsapp{send_message, send_image}, gmail{mail}, impertinent{none}.
    static Taxonomy standard();

    std::size_t app_count() const { return apps_.size(); }
    const std::vector<App>& apps() const { return apps_; }
    const App& app(std::size_t i) const { return apps_.at(i); }
    std::vector<std::string> app_names() const;

    std::optional<int> app_index(const std::string& name) const;
    std::optional<int> activity_index(int app, const std::string& activity) const;

    /// Apps with two or more activities get an activity classifier.
    bool has_activity_model(int app) const { return apps_.at(app).activities.size() >= 2; }

    nlohmann::json to_json() const;
    static Taxonomy from_json(const nlohmann::json& j);

    bool operator==(const Taxonomy&) const = default;

private:
    std::vector<App> apps_;
};

/// Name used for the activity of classes without one (impertinent).
inline constexpr const char* kNoActivity = "none";

/// One line of the labels sidecar written next to generated captures.
struct LabelEntry {
    std::string pcap;
    std::string flow_key;
    std::string app;
    std::string activity;

    bool operator==(const LabelEntry&) const = default;
};

/// `{"pcap", "flow_key", "app", "activity"}`.
std::string label_to_json_line(const LabelEntry& e);
LabelEntry parse_label_line(const std::string& line);

struct LabelMatch {
    std::size_t matched = 0;
    std::size_t records_without_label = 0;
    std::size_t labels_without_record = 0;
};

/// Sets app/activity labels of records whose (pcap, key) appears in
/// `labels`. Throws DataError when a (pcap, key) pair is listed twice.
LabelMatch attach_labels(std::vector<StreamRecord>& records, const std::vector<LabelEntry>& labels);

/// A labeled stream with both feature views precomputed.
struct LabeledSample {
    std::string key;
    int app = 0;
    int activity = 0;
    PooledSeries pooled;
    std::vector<PacketSummary> packets;
};

/// Converts labeled stream records; records without labels, with labels
/// outside the taxonomy, or without packets are skipped and counted.
struct DatasetBuild {
    std::vector<LabeledSample> samples;
    std::size_t unlabeled = 0;
    std::size_t unknown_label = 0;
};

DatasetBuild build_dataset(const std::vector<StreamRecord>& records, const Taxonomy& taxonomy,
                           const PreprocessOptions& prep);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified by (app, activity): each class contributes round(n * fraction)
/// test samples, drawn with a seeded shuffle. Index lists are ascending.
Split stratified_split(const std::vector<LabeledSample>& samples, double test_fraction, std::uint64_t seed);

}  // namespace trafprof
