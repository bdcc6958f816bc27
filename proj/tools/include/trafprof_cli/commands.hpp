#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "trafprof/baselines/ensemble.hpp"
#include "trafprof/models.hpp"
#include "trafprof_cli/run_config.hpp"

namespace trafprof::cli {

namespace fs = std::filesystem;

/// Writes pcaps/, labels.jsonl, synth.conf, users/ and manifest.json.
void cmd_synth(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log);

struct IngestOptions {
    /// pcap files, directories of pcaps, or synth output directories.
    std::vector<fs::path> inputs;
    std::optional<fs::path> labels;
    fs::path out;  ///< streams JSONL
    std::optional<fs::path> report;
};

void cmd_ingest(const RunConfig& cfg, const IngestOptions& opts, std::ostream& log);

enum class ModelKind { lstm, forest, svm };
std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& text);

struct TrainOptions {
    fs::path streams;
    ModelKind model = ModelKind::lstm;
    fs::path out;  ///< bundle directory
};

/// Bundle: meta.json, app.json, activity_<app>.json, history.json (lstm)
/// and manifest.json.
void cmd_train(const RunConfig& cfg, const TrainOptions& opts, std::ostream& log);

struct Bundle {
    ModelKind kind = ModelKind::lstm;
    nlohmann::ordered_json meta;
    Taxonomy taxonomy;
    PreprocessOptions prep;
    double tau = 0.5;
    std::variant<LstmEnsemble, BaselineEnsemble> model;

    StreamPrediction predict(const LabeledSample& sample) const;
};

/// Verifies manifest hashes before loading.
Bundle load_bundle(const fs::path& dir);

struct EvalOptions {
    fs::path bundle;
    fs::path streams;
    fs::path out;  ///< directory for metrics.json, confusion CSVs, predictions.jsonl
    bool all = false;  ///< evaluate every stream instead of the held-out split
};

void cmd_eval(const EvalOptions& opts, std::ostream& log);

struct ProfileTrainOptions {
    fs::path events;
    fs::path truth;
    std::optional<fs::path> traits;
    fs::path out;  ///< trait model JSON
};

void cmd_profile_train(const RunConfig& cfg, const ProfileTrainOptions& opts, std::ostream& log);

struct ProfilePredictOptions {
    fs::path model;
    std::optional<fs::path> events;
    fs::path out;  ///< posteriors JSONL
    std::vector<std::string> users;  ///< scored even without events
    bool holdout_only = false;
    std::optional<fs::path> truth;
    std::optional<fs::path> report;
};

void cmd_profile_predict(const ProfilePredictOptions& opts, std::ostream& log);

struct GradcheckOptions {
    int hidden = 8;
    int input = 6;
    int steps = 10;
    int classes = 5;
    int gate_depth = 1;
    int instances = 3;
    double eps = 1e-5;
    double tolerance = 1e-4;
    bool corrupt = false;  ///< negative control: break the recurrent gradient path
    std::optional<fs::path> out;
};

/// Returns true when every instance passes.
bool cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& opts, std::ostream& log);

}  // namespace trafprof::cli
