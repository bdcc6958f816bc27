#pragma once

#include <span>
#include <vector>

#include "trafprof/nn/tensor.hpp"

namespace trafprof::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update of a single tensor; `t` counts from 1.
void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, const AdamConfig& cfg, long t);

/// Adam over a fixed list of tensors (first and second moments per tensor).
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_{cfg} {}

    /// `params` and `grads` must list matching tensors in the same order on
    /// every call.
    void step(std::span<Matrix* const> params, std::span<Matrix* const> grads);

    long steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

double global_norm(std::span<Matrix* const> grads);

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Matrix* const> grads, double max_norm);

}  // namespace trafprof::nn
