#include "trafprof/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "trafprof/error.hpp"
#include "trafprof/rng.hpp"

namespace trafprof {

Taxonomy::Taxonomy(std::vector<App> apps) : apps_{std::move(apps)} {
    std::set<std::string> seen;
    for (const auto& a : apps_) {
        if (a.name.empty() || !seen.insert(a.name).second) throw BadConfig{"app names must be unique and non-empty"};
        if (a.activities.empty()) throw BadConfig{"app " + a.name + " has no activities"};
        std::set<std::string> acts(a.activities.begin(), a.activities.end());
        if (acts.size() != a.activities.size()) throw BadConfig{"duplicate activity in app " + a.name};
    }
}

Taxonomy Taxonomy::standard() {
    return Taxonomy{{
        {"facebook", {"post_text", "post_image"}},
        {"youtube", {"play_video", "comment"}},
        {"whatsapp", {"send_message", "send_image"}},
        {"gmail", {"mail"}},
        {"impertinent", {kNoActivity}},
    }};
}

std::vector<std::string> Taxonomy::app_names() const {
    std::vector<std::string> out;
    for (const auto& a : apps_) out.push_back(a.name);
    return out;
}

std::optional<int> Taxonomy::app_index(const std::string& name) const {
    for (std::size_t i = 0; i < apps_.size(); ++i) {
        if (apps_[i].name == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

std::optional<int> Taxonomy::activity_index(int app, const std::string& activity) const {
    const auto& acts = apps_.at(app).activities;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        if (acts[i] == activity) return static_cast<int>(i);
    }
    return std::nullopt;
}

nlohmann::json Taxonomy::to_json() const {
    nlohmann::json apps = nlohmann::json::array();
    for (const auto& a : apps_) apps.push_back({{"name", a.name}, {"activities", a.activities}});
    return apps;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& j) {
    std::vector<App> apps;
    for (const auto& a : j) apps.push_back({a.at("name").get<std::string>(), a.at("activities").get<std::vector<std::string>>()});
    return Taxonomy{std::move(apps)};
}

DatasetBuild build_dataset(const std::vector<StreamRecord>& records, const Taxonomy& taxonomy,
                           const PreprocessOptions& prep) {
    DatasetBuild out;
    for (const auto& rec : records) {
        if (!rec.app_label || rec.packets.empty()) {
            ++out.unlabeled;
            continue;
        }
        const auto app = taxonomy.app_index(*rec.app_label);
        const auto act = app ? taxonomy.activity_index(*app, rec.activity_label.value_or(kNoActivity)) : std::nullopt;
        if (!app || !act) {
            ++out.unknown_label;
            continue;
        }
        out.samples.push_back({rec.key, *app, *act, preprocess(rec.packets, prep), rec.packets});
    }
    return out;
}

std::string label_to_json_line(const LabelEntry& e) {
    nlohmann::ordered_json j;
    j["pcap"] = e.pcap;
    j["flow_key"] = e.flow_key;
    j["app"] = e.app;
    j["activity"] = e.activity;
    return j.dump();
}

LabelEntry parse_label_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        return {j.at("pcap").get<std::string>(), j.at("flow_key").get<std::string>(), j.at("app").get<std::string>(),
                j.at("activity").get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
        throw DataError{fmt::format("bad label line: {}", e.what())};
    }
}

LabelMatch attach_labels(std::vector<StreamRecord>& records, const std::vector<LabelEntry>& labels) {
    std::map<std::pair<std::string, std::string>, const LabelEntry*> index;
    for (const auto& l : labels) {
        if (!index.emplace(std::pair{l.pcap, l.flow_key}, &l).second) {
            throw DataError{fmt::format("label for {} in {} is listed twice", l.flow_key, l.pcap)};
        }
    }
    LabelMatch m;
    std::set<const LabelEntry*> used;
    for (auto& r : records) {
        auto it = index.find({r.pcap, r.key});
        if (it == index.end()) {
            ++m.records_without_label;
            continue;
        }
        r.app_label = it->second->app;
        r.activity_label = it->second->activity;
        used.insert(it->second);
        ++m.matched;
    }
    m.labels_without_record = labels.size() - used.size();
    return m;
}

Split stratified_split(const std::vector<LabeledSample>& samples, double test_fraction, std::uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction > 1.0) throw BadConfig{"test fraction must be in [0, 1]"};
    std::map<std::pair<int, int>, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[{samples[i].app, samples[i].activity}].push_back(i);

    Split split;
    Rng rng = make_rng(seed, "split");
    for (auto& [cls, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::lround(static_cast<double>(idx.size()) * test_fraction));
        split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace trafprof
