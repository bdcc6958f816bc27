#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafprof/dataset.hpp"
#include "trafprof/evaluation.hpp"
#include "trafprof/nn/dense.hpp"
#include "trafprof/nn/lstm.hpp"
#include "trafprof/nn/optim.hpp"
#include "trafprof/preprocess.hpp"

namespace trafprof {

inline constexpr int kPooledDim = 6;
inline constexpr int kAppCells = 4;
inline constexpr int kDefaultHidden = 32;

/// Which pooled entries each application cell reads, in processing order.
struct BlockAssignment {
    std::vector<std::vector<int>> cell_order;

    /// Reversed time, two scale blocks per cell: cell 1 reads blocks 7,6
    /// (coarsest), cell 2 blocks 5,4, cell 3 blocks 3,2, and cell 4 the
    /// raw first-32-packet blocks 1,0, so the most discriminative entries
    /// are consumed last.
    static BlockAssignment reversed_pairs();

    bool operator==(const BlockAssignment&) const = default;
};

/// Four LSTM cells chained through their cell states, with a softmax head
/// over the concatenated final thetas.
struct AppClassifier {
    std::vector<std::string> classes;
    std::vector<nn::LstmParams> cells;
    nn::DenseParams head;
    BlockAssignment assignment;

    int hidden() const { return cells.front().hidden(); }
    int class_count() const { return static_cast<int>(classes.size()); }

    static AppClassifier zeros(std::vector<std::string> classes, int hidden = kDefaultHidden,
                               BlockAssignment assignment = BlockAssignment::reversed_pairs());
    static AppClassifier initialized(std::vector<std::string> classes, int hidden, Rng& rng,
                                     BlockAssignment assignment = BlockAssignment::reversed_pairs());

    void visit(const nn::TensorVisitor& f);
    nlohmann::ordered_json to_json() const;
    static AppClassifier from_json(const nlohmann::ordered_json& j);

    bool operator==(const AppClassifier&) const = default;
};

struct AppOutput {
    nn::Vector softmax;
    std::vector<nn::Vector> cell_states;   ///< final c of each cell
    std::vector<nn::Vector> final_thetas;  ///< final theta of each cell
};

AppOutput app_forward(const AppClassifier& model, const PooledSeries& pooled);

/// One LSTM cell reading each pooled entry (in reversed time order)
/// concatenated with the app softmax and the last app cell state.
struct ActivityClassifier {
    std::string app;
    std::vector<std::string> classes;
    nn::LstmParams cell;
    nn::DenseParams head;

    int app_classes = 0;
    int app_hidden = 0;

    static int input_size(int app_classes, int app_hidden) { return kPooledDim + app_classes + app_hidden; }

    static ActivityClassifier zeros(std::string app, std::vector<std::string> classes, int app_classes,
                                    int app_hidden, int hidden = kDefaultHidden, int gate_depth = 1);
    static ActivityClassifier initialized(std::string app, std::vector<std::string> classes, int app_classes,
                                          int app_hidden, int hidden, int gate_depth, Rng& rng);

    void visit(const nn::TensorVisitor& f);
    nlohmann::ordered_json to_json() const;
    static ActivityClassifier from_json(const nlohmann::ordered_json& j);

    bool operator==(const ActivityClassifier&) const = default;
};

nn::Vector activity_forward(const ActivityClassifier& model, const PooledSeries& pooled, const nn::Vector& app_softmax,
                            const nn::Vector& app_cell);

/// Argmax class when its probability is at least `tau`.
std::optional<int> route(const nn::Vector& softmax, double tau);

struct Prediction {
    int app = 0;
    nn::Vector app_probs;
    std::optional<int> activity;
    nn::Vector activity_probs;
    bool routed = false;
};

struct LstmEnsemble {
    Taxonomy taxonomy;
    AppClassifier app;
    std::map<std::string, ActivityClassifier> activity;

    static LstmEnsemble initialized(const Taxonomy& taxonomy, int hidden, int gate_depth, std::uint64_t seed);

    /// {"taxonomy", "app", "activity": {app: model}}.
    nlohmann::ordered_json to_json() const;
    static LstmEnsemble from_json(const nlohmann::ordered_json& j);

    bool operator==(const LstmEnsemble&) const = default;
};

Prediction predict(const LstmEnsemble& models, const PooledSeries& pooled, double tau);

/// Prediction used for evaluation: app argmax, the true app's activity
/// classifier, and the routed activity.
StreamPrediction predict_for_eval(const LstmEnsemble& models, const LabeledSample& sample, double tau);

struct TrainConfig {
    int n_batches = 2000;
    int batch_size = 50;
    nn::AdamConfig adam;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
};

struct TrainHistory {
    std::vector<double> app_loss;
    std::map<std::string, std::vector<double>> activity_loss;
};

/// Trains the app classifier and every activity classifier side by side.
/// Each batch draws a class uniformly, then a sample uniformly within it.
/// Activity classifiers see streams of their true app only, with the
/// current app model's outputs as constant inputs; no gradient crosses
/// between models. Throws EmptyClass when a class has no samples.
TrainHistory train(LstmEnsemble& models, const std::vector<LabeledSample>& samples, const TrainConfig& cfg);

/// Mean cross-entropy of the app head over a batch, with gradients
/// accumulated into `grads` (shaped like `model`). Exposed for gradient
/// checks.
double app_loss_and_grads(const AppClassifier& model, std::span<const PooledSeries* const> batch,
                          std::span<const int> labels, AppClassifier* grads);

double activity_loss_and_grads(const ActivityClassifier& model, std::span<const PooledSeries* const> batch,
                               const nn::Matrix& context, std::span<const int> labels, ActivityClassifier* grads);

/// Column-per-sample app softmax and last-cell state for a batch.
struct AppBatchOutput {
    nn::Matrix softmax;    ///< K x B
    nn::Matrix last_cell;  ///< H x B
};

AppBatchOutput app_forward_batch(const AppClassifier& model, std::span<const PooledSeries* const> batch);

}  // namespace trafprof
