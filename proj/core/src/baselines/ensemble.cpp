#include "trafprof/baselines/ensemble.hpp"

#include "trafprof/error.hpp"
#include "trafprof/rng.hpp"

namespace trafprof {

int classic_predict(const ClassicModel& m, std::span<const double> row) {
    return std::visit([&](const auto& model) { return model.predict(row); }, m);
}

nlohmann::ordered_json classic_to_json(const ClassicModel& m) {
    return std::visit([](const auto& model) { return model.to_json(); }, m);
}

ClassicModel classic_from_json(const nlohmann::ordered_json& j) {
    const auto kind = j.at("model").get<std::string>();
    if (kind == "random_forest") return ForestModel::from_json(j);
    if (kind == "linear_svm") return LinearSvmModel::from_json(j);
    throw DataError{"unknown baseline model kind " + kind};
}

StatsFeatures sample_features(const LabeledSample& s) {
    return stats_to_features(compute_stats(s.packets));
}

FeatureMatrix feature_matrix(const std::vector<LabeledSample>& samples, std::span<const std::size_t> rows) {
    FeatureMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kStatsFeatureCount));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto f = sample_features(samples.at(rows[i]));
        for (std::size_t k = 0; k < f.size(); ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = f[k];
    }
    return x;
}

namespace {

ClassicModel fit(const FeatureMatrix& x, const std::vector<int>& y, int n_classes, const BaselineConfig& cfg,
                 ForestConfig forest, std::uint64_t seed) {
    if (cfg.kind == BaselineKind::forest) {
        forest.seed = seed;
        return forest_train(x, y, n_classes, forest);
    }
    SvmConfig svm = cfg.svm;
    svm.seed = seed;
    return svm_train(x, y, n_classes, svm);
}

}  // namespace

BaselineEnsemble baseline_train(const Taxonomy& taxonomy, const std::vector<LabeledSample>& samples,
                                const BaselineConfig& cfg) {
    std::vector<std::size_t> all(samples.size());
    std::vector<int> app_labels(samples.size());
    std::vector<std::size_t> per_app(taxonomy.app_count(), 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        all[i] = i;
        app_labels[i] = samples[i].app;
        ++per_app.at(samples[i].app);
    }
    for (std::size_t a = 0; a < taxonomy.app_count(); ++a) {
        if (per_app[a] == 0) throw EmptyClass{"no training samples for app " + taxonomy.app(a).name};
    }

    BaselineEnsemble out{taxonomy,
                         fit(feature_matrix(samples, all), app_labels, static_cast<int>(taxonomy.app_count()), cfg,
                             cfg.app_forest, substream_seed(cfg.seed, "baseline/app")),
                         {}};
    for (std::size_t a = 0; a < taxonomy.app_count(); ++a) {
        if (!taxonomy.has_activity_model(static_cast<int>(a))) continue;
        const auto& app = taxonomy.app(a);
        std::vector<std::size_t> rows;
        std::vector<int> labels;
        std::vector<std::size_t> per_activity(app.activities.size(), 0);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].app != static_cast<int>(a)) continue;
            rows.push_back(i);
            labels.push_back(samples[i].activity);
            ++per_activity.at(samples[i].activity);
        }
        for (std::size_t k = 0; k < per_activity.size(); ++k) {
            if (per_activity[k] == 0) throw EmptyClass{"no training samples for " + app.name + "/" + app.activities[k]};
        }
        out.activity.emplace(app.name, fit(feature_matrix(samples, rows), labels, static_cast<int>(app.activities.size()),
                                           cfg, cfg.activity_forest, substream_seed(cfg.seed, "baseline/activity/" + app.name)));
    }
    return out;
}

StreamPrediction baseline_predict(const BaselineEnsemble& models, const LabeledSample& sample) {
    const auto f = sample_features(sample);
    StreamPrediction p;
    p.app = classic_predict(models.app, f);
    auto activity_of = [&](int app) -> std::optional<int> {
        auto it = models.activity.find(models.taxonomy.app(app).name);
        if (it == models.activity.end()) return std::nullopt;
        return classic_predict(it->second, f);
    };
    p.activity = activity_of(sample.app);
    p.routed_activity = activity_of(p.app);
    return p;
}

nlohmann::ordered_json BaselineEnsemble::to_json() const {
    nlohmann::ordered_json j;
    j["taxonomy"] = taxonomy.to_json();
    j["features"] = stats_feature_names();
    j["app"] = classic_to_json(app);
    nlohmann::ordered_json acts = nlohmann::ordered_json::object();
    for (const auto& [name, m] : activity) acts[name] = classic_to_json(m);
    j["activity"] = std::move(acts);
    return j;
}

BaselineEnsemble BaselineEnsemble::from_json(const nlohmann::ordered_json& j) {
    BaselineEnsemble e{Taxonomy::from_json(nlohmann::json::parse(j.at("taxonomy").dump())), classic_from_json(j.at("app")), {}};
    for (const auto& [name, m] : j.at("activity").items()) {
        if (!e.taxonomy.app_index(name)) throw DataError{"activity model for unknown app " + name};
        e.activity.emplace(name, classic_from_json(m));
    }
    return e;
}

}  // namespace trafprof
