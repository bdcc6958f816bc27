#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "trafprof/baselines/forest.hpp"
#include "trafprof/baselines/stats.hpp"
#include "trafprof/baselines/svm.hpp"
#include "trafprof/dataset.hpp"
#include "trafprof/evaluation.hpp"

namespace trafprof {

using ClassicModel = std::variant<ForestModel, LinearSvmModel>;

int classic_predict(const ClassicModel& m, std::span<const double> row);
nlohmann::ordered_json classic_to_json(const ClassicModel& m);
ClassicModel classic_from_json(const nlohmann::ordered_json& j);

StatsFeatures sample_features(const LabeledSample& s);
FeatureMatrix feature_matrix(const std::vector<LabeledSample>& samples, std::span<const std::size_t> rows);

enum class BaselineKind { forest, svm };

struct BaselineConfig {
    BaselineKind kind = BaselineKind::forest;
    ForestConfig app_forest{50, 15};
    ForestConfig activity_forest{20, 10};
    SvmConfig svm;
    std::uint64_t seed = 0;
};

/// Flow-statistics app classifier plus one activity classifier per app with
/// two or more activities, each trained on its true app's streams.
struct BaselineEnsemble {
    Taxonomy taxonomy;
    ClassicModel app;
    std::map<std::string, ClassicModel> activity;

    nlohmann::ordered_json to_json() const;
    static BaselineEnsemble from_json(const nlohmann::ordered_json& j);
};

/// Forest seeds come from substreams "baseline/app" and
/// "baseline/activity/<app>" of cfg.seed. Throws EmptyClass like train().
BaselineEnsemble baseline_train(const Taxonomy& taxonomy, const std::vector<LabeledSample>& samples,
                                const BaselineConfig& cfg);

StreamPrediction baseline_predict(const BaselineEnsemble& models, const LabeledSample& sample);

}  // namespace trafprof
