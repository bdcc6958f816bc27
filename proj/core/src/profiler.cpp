#include "trafprof/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

#include <fmt/format.h>

#include "trafprof/error.hpp"

namespace trafprof {

std::string event_to_json_line(const ProfileEvent& e) {
    nlohmann::ordered_json j;
    j["user"] = e.user;
    j["ts"] = e.ts;
    j["app"] = e.app;
    j["activity"] = e.activity;
    return j.dump();
}

ProfileEvent parse_event_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        return {j.at("user").get<std::string>(), j.at("ts").get<std::uint64_t>(), j.at("app").get<std::string>(),
                j.at("activity").get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
        throw DataError{fmt::format("bad event line: {}", e.what())};
    }
}

std::vector<ProfileEvent> read_event_log(std::istream& in) {
    std::vector<ProfileEvent> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_event_line(line));
        } catch (const DataError& e) {
            throw DataError{fmt::format("event log line {}: {}", n, e.what())};
        }
    }
    return out;
}

EventVocabulary::EventVocabulary(std::vector<std::string> keys) : keys_{std::move(keys)} {
    if (std::find(keys_.begin(), keys_.end(), kOther) == keys_.end()) keys_.emplace_back(kOther);
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (!index_.emplace(keys_[i], i).second) throw BadConfig{"duplicate event key " + keys_[i]};
    }
}

EventVocabulary EventVocabulary::from_taxonomy(const Taxonomy& taxonomy) {
    std::vector<std::string> keys;
    for (const auto& app : taxonomy.apps()) {
        for (const auto& act : app.activities) keys.push_back(app.name + "/" + act);
    }
    return EventVocabulary{std::move(keys)};
}

const std::string& EventVocabulary::key_for(const std::string& app, const std::string& activity) const {
    return keys_[index_of(app + "/" + activity)];
}

std::size_t EventVocabulary::index_of(const std::string& key) const {
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    return index_.at(kOther);
}

nlohmann::json ProfileRecord::to_json() const {
    return {{"user", user_id}, {"counts", counts}, {"total_streams", total_streams}, {"last_updated", last_updated}};
}

ProfileRecord ProfileRecord::from_json(const nlohmann::json& j) {
    ProfileRecord r{j.at("user").get<std::string>(), j.at("counts").get<std::map<std::string, std::uint64_t>>(),
                    j.at("total_streams").get<std::uint64_t>(), j.at("last_updated").get<std::uint64_t>()};
    std::uint64_t sum = 0;
    for (const auto& [key, n] : r.counts) sum += n;
    if (sum != r.total_streams) throw DataError{"profile " + r.user_id + " counts do not add up to total_streams"};
    return r;
}

ProfileDb::ProfileDb(EventVocabulary vocabulary) : vocab_{std::move(vocabulary)} {}

ProfileDb::ProfileDb(ProfileDb&& other) noexcept : vocab_{std::move(other.vocab_)} {
    std::lock_guard lock{other.mu_};
    profiles_ = std::move(other.profiles_);
}

ProfileRecord ProfileDb::update(const ProfileEvent& e) {
    const auto& key = vocab_.key_for(e.app, e.activity);
    std::lock_guard lock{mu_};
    auto& r = profiles_[e.user];
    r.user_id = e.user;
    ++r.counts[key];
    ++r.total_streams;
    r.last_updated = std::max(r.last_updated, e.ts);
    return r;
}

std::optional<ProfileRecord> ProfileDb::get(const std::string& user) const {
    std::lock_guard lock{mu_};
    if (auto it = profiles_.find(user); it != profiles_.end()) return it->second;
    return std::nullopt;
}

std::map<std::string, ProfileRecord> ProfileDb::snapshot() const {
    std::lock_guard lock{mu_};
    return profiles_;
}

nlohmann::json ProfileDb::snapshot_json() const {
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& [user, r] : snapshot()) profiles.push_back(r.to_json());
    return {{"vocabulary", vocab_.keys()}, {"profiles", std::move(profiles)}};
}

ProfileDb ProfileDb::from_snapshot(const nlohmann::json& j) {
    ProfileDb db{EventVocabulary{j.at("vocabulary").get<std::vector<std::string>>()}};
    for (const auto& p : j.at("profiles")) {
        auto r = ProfileRecord::from_json(p);
        db.profiles_.emplace(r.user_id, std::move(r));
    }
    return db;
}

ProfileDb replay(const EventVocabulary& vocabulary, const std::vector<ProfileEvent>& events) {
    ProfileDb db{vocabulary};
    for (const auto& e : events) db.update(e);
    return db;
}

TraitConfig trait_config_from_json(const nlohmann::json& j) {
    auto c = j.get<TraitConfig>();
    for (const auto& [trait, labels] : c) {
        if (labels.empty()) throw BadConfig{"trait " + trait + " has no labels"};
        auto sorted = labels;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw BadConfig{"trait " + trait + " repeats a label"};
        }
    }
    return c;
}

nlohmann::json trait_config_to_json(const TraitConfig& c) {
    return c;
}

TraitTruth trait_truth_from_json(const nlohmann::json& j) {
    return j.get<TraitTruth>();
}

nlohmann::json trait_truth_to_json(const TraitTruth& t) {
    return t;
}

nlohmann::json TraitModel::to_json() const {
    return {{"trait", trait},         {"labels", labels},     {"vocabulary", vocabulary},
            {"alpha", alpha},         {"log_prior", log_prior}, {"log_cond", log_cond}};
}

TraitModel TraitModel::from_json(const nlohmann::json& j) {
    TraitModel m{j.at("trait").get<std::string>(),
                 j.at("labels").get<std::vector<std::string>>(),
                 j.at("vocabulary").get<std::vector<std::string>>(),
                 j.at("alpha").get<double>(),
                 j.at("log_prior").get<std::vector<double>>(),
                 j.at("log_cond").get<std::vector<std::vector<double>>>()};
    if (m.log_prior.size() != m.labels.size() || m.log_cond.size() != m.labels.size()) {
        throw DataError{"trait model " + m.trait + " has inconsistent label tables"};
    }
    for (const auto& row : m.log_cond) {
        if (row.size() != m.vocabulary.size()) throw DataError{"trait model " + m.trait + " has a short event table"};
    }
    return m;
}

TraitModel nb_train(const std::string& trait, const std::vector<std::string>& labels,
                    const std::vector<LabeledProfile>& profiles, const EventVocabulary& vocabulary, double alpha) {
    if (!(alpha > 0.0)) throw BadConfig{"naive Bayes needs alpha > 0"};
    if (labels.empty()) throw BadConfig{"trait " + trait + " has no labels"};
    const std::size_t v = vocabulary.size();
    std::vector<double> n_profiles(labels.size(), 0.0);
    std::vector<std::vector<double>> counts(labels.size(), std::vector<double>(v, 0.0));
    for (const auto& p : profiles) {
        const auto it = std::find(labels.begin(), labels.end(), p.label);
        if (it == labels.end()) throw BadConfig{fmt::format("unknown {} label '{}'", trait, p.label)};
        const auto l = static_cast<std::size_t>(it - labels.begin());
        n_profiles[l] += 1.0;
        for (const auto& [key, n] : p.record.counts) counts[l][vocabulary.index_of(key)] += static_cast<double>(n);
    }
    for (std::size_t l = 0; l < labels.size(); ++l) {
        if (n_profiles[l] == 0.0) throw EmptyTraining{fmt::format("no training profile with {} = {}", trait, labels[l])};
    }

    TraitModel m{trait, labels, vocabulary.keys(), alpha, {}, {}};
    const double total_profiles = static_cast<double>(profiles.size());
    for (std::size_t l = 0; l < labels.size(); ++l) {
        m.log_prior.push_back(std::log(n_profiles[l] / total_profiles));
        double total = 0.0;
        for (double c : counts[l]) total += c;
        const double denom = alpha * static_cast<double>(v) + total;
        std::vector<double> row(v);
        for (std::size_t e = 0; e < v; ++e) row[e] = std::log((alpha + counts[l][e]) / denom);
        m.log_cond.push_back(std::move(row));
    }
    return m;
}

std::vector<double> nb_log_scores(const TraitModel& model, const ProfileRecord& record) {
    std::map<std::string, std::size_t> index;
    for (std::size_t e = 0; e < model.vocabulary.size(); ++e) index.emplace(model.vocabulary[e], e);
    const auto other = index.find(EventVocabulary::kOther);

    std::vector<double> score = model.log_prior;
    for (const auto& [key, n] : record.counts) {
        auto it = index.find(key);
        if (it == index.end()) it = other;
        if (it == index.end() || n == 0) continue;
        for (std::size_t l = 0; l < score.size(); ++l) score[l] += static_cast<double>(n) * model.log_cond[l][it->second];
    }
    return score;
}

std::vector<double> nb_predict(const TraitModel& model, const ProfileRecord& record) {
    auto score = nb_log_scores(model, record);
    const double mx = *std::max_element(score.begin(), score.end());
    double sum = 0.0;
    for (auto& s : score) sum += (s = std::exp(s - mx));
    for (auto& s : score) s /= sum;
    return score;
}

}  // namespace trafprof
