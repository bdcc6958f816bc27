#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "trafprof/nn/tensor.hpp"

namespace trafprof {

/// One sample per row.
using FeatureMatrix = nn::Matrix;

/// Gini impurity of a class histogram; zero for an empty one.
double gini(std::span<const double> counts);

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;  ///< left branch takes value <= threshold
    double decrease = 0.0;   ///< parent impurity minus weighted child impurity

    bool operator==(const SplitChoice&) const = default;
};

/// Best Gini split of the rows `rows` over `features`, trying the midpoint
/// between every pair of consecutive distinct values. Ties keep the first
/// feature in `features` order, then the lowest threshold. Empty when no
/// feature takes two distinct values.
std::optional<SplitChoice> best_split(const FeatureMatrix& x, std::span<const int> y, int n_classes,
                                      std::span<const std::size_t> rows, std::span<const int> features);

struct TreeNode {
    int feature = -1;  ///< -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> histogram;  ///< class counts reaching the node

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  ///< nodes[0] is the root

    int depth() const;
    const TreeNode& leaf_for(std::span<const double> row) const;
    /// Argmax of the leaf histogram, lowest class on ties.
    int predict(std::span<const double> row) const;

    bool operator==(const DecisionTree&) const = default;
};

struct ForestConfig {
    int n_estimators = 50;
    int max_depth = 15;
    /// Features tried per node; 0 means ceil(sqrt(d)).
    int max_features = 0;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    /// Trees are trained on up to this many threads; results do not depend on it.
    int threads = 1;

    bool operator==(const ForestConfig&) const = default;
};

struct ForestModel {
    int n_classes = 0;
    int n_features = 0;
    ForestConfig config;
    std::vector<DecisionTree> trees;

    /// Per-class count of tree votes.
    std::vector<int> votes(std::span<const double> row) const;
    /// Majority over trees, lowest class on ties.
    int predict(std::span<const double> row) const;

    /// Trees as nested objects: {"feature", "threshold", "left", "right"}
    /// for splits and {"leaf": histogram} for leaves.
    nlohmann::ordered_json to_json() const;
    static ForestModel from_json(const nlohmann::ordered_json& j);

    bool operator==(const ForestModel&) const = default;
};

/// CART trees on bootstrap resamples with per-node feature subsampling.
/// Tree k draws from the RNG substream "forest/tree/k". Labels must lie in
/// [0, n_classes); a single present class yields single-leaf trees.
ForestModel forest_train(const FeatureMatrix& x, std::span<const int> y, int n_classes, const ForestConfig& cfg);

}  // namespace trafprof
