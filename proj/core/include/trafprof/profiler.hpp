#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trafprof/dataset.hpp"

namespace trafprof {

/// One labeled stream attributed to a user.
struct ProfileEvent {
    std::string user;
    std::uint64_t ts = 0;
    std::string app;
    std::string activity;

    bool operator==(const ProfileEvent&) const = default;
};

/// `{"user", "ts", "app", "activity"}` on one line.
std::string event_to_json_line(const ProfileEvent& e);
ProfileEvent parse_event_line(const std::string& line);
/// Skips blank lines; throws DataError naming the line number on bad input.
std::vector<ProfileEvent> read_event_log(std::istream& in);

/// Event keys "app/activity" for every taxonomy pair plus the catch-all
/// "other".
class EventVocabulary {
public:
    static constexpr const char* kOther = "other";

    EventVocabulary() = default;
    explicit EventVocabulary(std::vector<std::string> keys);
    static EventVocabulary from_taxonomy(const Taxonomy& taxonomy);

    const std::vector<std::string>& keys() const { return keys_; }
    std::size_t size() const { return keys_.size(); }
    /// The key for (app, activity), or "other" when unknown.
    const std::string& key_for(const std::string& app, const std::string& activity) const;
    /// Index of `key`, or of "other" when unknown.
    std::size_t index_of(const std::string& key) const;

    bool operator==(const EventVocabulary&) const = default;

private:
    std::vector<std::string> keys_;
    std::map<std::string, std::size_t> index_;
};

struct ProfileRecord {
    std::string user_id;
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total_streams = 0;
    std::uint64_t last_updated = 0;  ///< latest event timestamp seen

    nlohmann::json to_json() const;
    static ProfileRecord from_json(const nlohmann::json& j);

    bool operator==(const ProfileRecord&) const = default;
};

/// Per-user event counts. Updates are serialized; reads return copies.
class ProfileDb {
public:
    explicit ProfileDb(EventVocabulary vocabulary);
    ProfileDb(ProfileDb&& other) noexcept;
    ProfileDb& operator=(ProfileDb&&) = delete;

    ProfileRecord update(const ProfileEvent& e);
    std::optional<ProfileRecord> get(const std::string& user) const;
    std::map<std::string, ProfileRecord> snapshot() const;
    const EventVocabulary& vocabulary() const { return vocab_; }

    /// {"vocabulary": [...], "profiles": [record, ...]} ordered by user.
    nlohmann::json snapshot_json() const;
    static ProfileDb from_snapshot(const nlohmann::json& j);

private:
    EventVocabulary vocab_;
    mutable std::mutex mu_;
    std::map<std::string, ProfileRecord> profiles_;
};

ProfileDb replay(const EventVocabulary& vocabulary, const std::vector<ProfileEvent>& events);

/// Trait name -> label vocabulary, e.g. {"age_group": ["young", "old"]}.
using TraitConfig = std::map<std::string, std::vector<std::string>>;
/// User -> trait -> label.
using TraitTruth = std::map<std::string, std::map<std::string, std::string>>;

TraitConfig trait_config_from_json(const nlohmann::json& j);
nlohmann::json trait_config_to_json(const TraitConfig& c);
TraitTruth trait_truth_from_json(const nlohmann::json& j);
nlohmann::json trait_truth_to_json(const TraitTruth& t);

/// Multinomial naive Bayes over event counts.
struct TraitModel {
    std::string trait;
    std::vector<std::string> labels;
    std::vector<std::string> vocabulary;
    double alpha = 1.0;
    std::vector<double> log_prior;              ///< per label
    std::vector<std::vector<double>> log_cond;  ///< [label][event]

    nlohmann::json to_json() const;
    static TraitModel from_json(const nlohmann::json& j);

    bool operator==(const TraitModel&) const = default;
};

struct LabeledProfile {
    ProfileRecord record;
    std::string label;
};

/// prior = label frequency among profiles; P(event | label) =
/// (alpha + count) / (alpha * V + total). Throws EmptyTraining when any
/// label has no profile, or BadConfig for an unknown label or alpha <= 0.
TraitModel nb_train(const std::string& trait, const std::vector<std::string>& labels,
                    const std::vector<LabeledProfile>& profiles, const EventVocabulary& vocabulary, double alpha = 1.0);

/// Normalized posterior over model.labels, accumulated in log space.
/// Counts under keys outside the vocabulary go to "other".
std::vector<double> nb_predict(const TraitModel& model, const ProfileRecord& record);

/// Log-space accumulation before normalization (log prior + sum count * log cond).
std::vector<double> nb_log_scores(const TraitModel& model, const ProfileRecord& record);

}  // namespace trafprof
