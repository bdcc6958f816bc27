#pragma once

#include <span>

#include "trafprof/nn/tensor.hpp"

namespace trafprof::nn {

/// Affine output layer: logits = W h + b.
struct DenseParams {
    Matrix W;  ///< K x H
    Matrix b;  ///< K x 1

    int outputs() const { return static_cast<int>(W.rows()); }
    int inputs() const { return static_cast<int>(W.cols()); }

    static DenseParams zeros(int outputs, int inputs);
    /// Uniform(-1/sqrt(inputs), 1/sqrt(inputs)) weights, zero bias.
    static DenseParams initialized(int outputs, int inputs, Rng& rng);

    /// Column-per-sample logits.
    Matrix forward(const Matrix& h) const;
    /// Accumulates parameter gradients; returns d(loss)/dh.
    Matrix backward(const Matrix& h, const Matrix& dlogits, DenseParams& grads) const;

    void visit(const TensorVisitor& f);
    void set_zero();
    nlohmann::ordered_json to_json() const;
    static DenseParams from_json(const nlohmann::ordered_json& j);

    bool operator==(const DenseParams&) const = default;
};

Vector softmax(const Vector& logits);
/// Column-wise softmax.
Matrix softmax_columns(const Matrix& logits);

struct XentResult {
    double loss;
    Vector dlogits;  ///< softmax - onehot
};

/// Cross-entropy of softmax(logits) against `label`, via log-sum-exp.
XentResult softmax_xent(const Vector& logits, int label);

struct BatchXentResult {
    double loss;       ///< mean over the batch
    Matrix dlogits;    ///< gradient of the mean loss
};

BatchXentResult softmax_xent_batch(const Matrix& logits, std::span<const int> labels);

}  // namespace trafprof::nn
