#include "trafprof/evaluation.hpp"

#include <numeric>

#include "trafprof/error.hpp"

namespace trafprof {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_{std::move(labels)}, counts_(labels_.size(), std::vector<std::size_t>(labels_.size(), 0)) {}

void ConfusionMatrix::add(int truth, int predicted) {
    ++counts_.at(truth).at(predicted);
}

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts_) n = std::accumulate(row.begin(), row.end(), n);
    return n;
}

std::size_t ConfusionMatrix::correct() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) n += counts_[i][i];
    return n;
}

double ConfusionMatrix::accuracy() const {
    const auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

std::string ConfusionMatrix::to_csv() const {
    std::string out = "true\\predicted";
    for (const auto& l : labels_) out += "," + l;
    out += "\n";
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        out += labels_[i];
        for (auto c : counts_[i]) out += "," + std::to_string(c);
        out += "\n";
    }
    return out;
}

nlohmann::json ConfusionMatrix::to_json() const {
    return {{"labels", labels_}, {"counts", counts_}, {"accuracy", accuracy()}, {"total", total()}};
}

ConfusionMatrix ConfusionMatrix::from_json(const nlohmann::json& j) {
    ConfusionMatrix m{j.at("labels").get<std::vector<std::string>>()};
    auto counts = j.at("counts").get<std::vector<std::vector<std::size_t>>>();
    if (counts.size() != m.labels_.size()) throw DataError{"confusion matrix has the wrong number of rows"};
    for (const auto& row : counts) {
        if (row.size() != m.labels_.size()) throw DataError{"confusion matrix has the wrong number of columns"};
    }
    m.counts_ = std::move(counts);
    return m;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json acts = nlohmann::json::object();
    for (const auto& [app, cm] : activity) acts[app] = cm.to_json();
    return {{"app", app.to_json()},
            {"activity", std::move(acts)},
            {"routed", routed},
            {"routed_correct", routed_correct}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    r.app = ConfusionMatrix::from_json(j.at("app"));
    for (const auto& [app, cm] : j.at("activity").items()) r.activity[app] = ConfusionMatrix::from_json(cm);
    r.routed = j.at("routed").get<std::size_t>();
    r.routed_correct = j.at("routed_correct").get<std::size_t>();
    return r;
}

EvalReport evaluate_predictions(const Taxonomy& taxonomy, const std::vector<const LabeledSample*>& samples,
                                const std::vector<StreamPrediction>& predictions) {
    if (samples.size() != predictions.size()) throw std::invalid_argument{"one prediction per sample expected"};
    EvalReport report;
    report.app = ConfusionMatrix{taxonomy.app_names()};
    for (std::size_t a = 0; a < taxonomy.app_count(); ++a) {
        if (taxonomy.has_activity_model(static_cast<int>(a))) {
            report.activity.emplace(taxonomy.app(a).name, ConfusionMatrix{taxonomy.app(a).activities});
        }
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = *samples[i];
        const auto& p = predictions[i];
        report.app.add(s.app, p.app);
        if (taxonomy.has_activity_model(s.app) && p.activity) {
            report.activity.at(taxonomy.app(s.app).name).add(s.activity, *p.activity);
        }
        if (p.routed_activity) {
            ++report.routed;
            if (p.app == s.app && *p.routed_activity == s.activity) ++report.routed_correct;
        }
    }
    return report;
}

}  // namespace trafprof
