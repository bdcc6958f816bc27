#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trafprof/baselines/ensemble.hpp"
#include "trafprof/kvconfig.hpp"
#include "trafprof/models.hpp"
#include "trafprof/preprocess.hpp"

namespace trafprof::cli {

/// Settings shared by every subcommand, read from the flat key-value
/// config file. Command-line flags override the matching keys.
struct RunConfig {
    std::uint64_t seed = 1;

    std::filesystem::path data_dir;   ///< paths.data
    std::filesystem::path model_dir;  ///< paths.model
    std::filesystem::path out_dir;    ///< paths.out
    std::filesystem::path traits;     ///< paths.traits
    std::filesystem::path population; ///< paths.population

    PreprocessOptions prep;

    int n_batches = 2000;
    int batch_size = 50;
    double lr = 1e-3;
    double clip_norm = 5.0;
    int hidden = 32;
    int gate_depth = 1;
    double tau = 0.5;
    double test_fraction = 0.2;

    BaselineConfig baseline;

    int users = 0;  ///< 0 keeps the population's own count
    int events_per_user = 200;
    double alpha = 1.0;
    double holdout = 0.0;

    std::string device_ip = "10.0.0.2";

    /// The raw file, kept for the synth.* and class.* keys.
    KvConfig kv;

    TrainConfig train_config() const;
};

/// Every key the tool understands; class.* keys are checked by synth.
const std::vector<std::string>& known_config_keys();

/// Parses and validates; throws BadConfig on unknown keys or bad values.
RunConfig run_config_from_kv(KvConfig kv);
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

}  // namespace trafprof::cli
