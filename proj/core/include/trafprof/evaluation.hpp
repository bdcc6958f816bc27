#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trafprof/dataset.hpp"

namespace trafprof {

/// counts[true][predicted].
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> labels);

    void add(int truth, int predicted);

    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t count(int truth, int predicted) const { return counts_.at(truth).at(predicted); }
    std::size_t total() const;
    std::size_t correct() const;
    /// Zero when empty.
    double accuracy() const;

    /// Header row of predicted classes, then one row per true class.
    std::string to_csv() const;
    nlohmann::json to_json() const;
    static ConfusionMatrix from_json(const nlohmann::json& j);

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::vector<std::string> labels_;
    std::vector<std::vector<std::size_t>> counts_;
};

/// What a model said about one stream.
struct StreamPrediction {
    int app = 0;
    /// From the true application's activity classifier (trained that way too).
    std::optional<int> activity;
    /// From the classifier selected by the thresholded app prediction.
    std::optional<int> routed_activity;
};

struct EvalReport {
    ConfusionMatrix app;
    std::map<std::string, ConfusionMatrix> activity;  ///< per app with an activity model
    std::size_t routed = 0;
    std::size_t routed_correct = 0;  ///< routed to the right app and right activity

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
};

EvalReport evaluate_predictions(const Taxonomy& taxonomy, const std::vector<const LabeledSample*>& samples,
                                const std::vector<StreamPrediction>& predictions);

}  // namespace trafprof
