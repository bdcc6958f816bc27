#pragma once

#include <cstdint>
#include <span>

#include <nlohmann/json.hpp>

#include "trafprof/baselines/forest.hpp"

namespace trafprof {

/// lambda / 2 * |w|^2 + mean_i max(0, 1 - y_i (w . x_i + b)), y_i in {-1, +1}.
double svm_objective(const nn::Vector& w, double b, const FeatureMatrix& x, std::span<const int> y, double lambda);

/// A subgradient of svm_objective; at a kink the hinge term contributes zero.
void svm_subgradient(const nn::Vector& w, double b, const FeatureMatrix& x, std::span<const int> y, double lambda,
                     nn::Vector& grad_w, double& grad_b);

struct SvmConfig {
    double lambda = 1e-3;
    int epochs = 40;
    std::uint64_t seed = 0;

    bool operator==(const SvmConfig&) const = default;
};

/// One-vs-rest linear SVM over standardized features.
struct LinearSvmModel {
    int n_classes = 0;
    SvmConfig config;
    nn::Vector mean;   ///< feature centering
    nn::Vector scale;  ///< feature scaling (1 for constant features)
    nn::Matrix w;      ///< n_classes x d, in standardized space
    nn::Vector b;

    nn::Vector decision(std::span<const double> row) const;
    /// Argmax decision value, lowest class on ties.
    int predict(std::span<const double> row) const;

    nlohmann::ordered_json to_json() const;
    static LinearSvmModel from_json(const nlohmann::ordered_json& j);

    bool operator==(const LinearSvmModel&) const = default;
};

/// Stochastic subgradient descent on the hinge objective, one binary
/// problem per class, step size 1 / (lambda * (t + t0)). Throws EmptyClass
/// with fewer than two classes present.
LinearSvmModel svm_train(const FeatureMatrix& x, std::span<const int> y, int n_classes, const SvmConfig& cfg);

}  // namespace trafprof
