#pragma once

#include <span>
#include <vector>

#include "trafprof/nn/tensor.hpp"

namespace trafprof::nn {

/// Row-block order of the stacked gate tensors.
enum Gate : int { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };
inline constexpr int kGateCount = 4;

/// Peephole LSTM whose recurrence runs only through the cell state:
///
///   g_t   = sigmoid(W_g x_t + U_g c_{t-1} + b_g),  g in {input, forget, output}
///   c_t   = f_t * c_{t-1} + i_t * tanh(W_c x_t + U_c c_{t-1} + b_c)
///   theta = o_t * tanh(c_t)
///
/// The four pre-activations are stored stacked as 4H rows. With
/// gate_depth > 1 each pre-activation z passes through gate_depth - 1 extra
/// layers z <- V tanh(z) + e (one H x H map per gate and layer) before its
/// nonlinearity.
struct LstmParams {
    Matrix W;  ///< 4H x D
    Matrix U;  ///< 4H x H
    Matrix b;  ///< 4H x 1
    std::vector<Matrix> depth_weights;  ///< gate_depth - 1 tensors of 4H x H
    std::vector<Matrix> depth_bias;     ///< gate_depth - 1 tensors of 4H x 1

    int hidden() const { return static_cast<int>(U.cols()); }
    int input() const { return static_cast<int>(W.cols()); }
    int gate_depth() const { return static_cast<int>(depth_weights.size()) + 1; }

    static LstmParams zeros(int hidden, int input, int gate_depth = 1);
    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget bias +1, other biases 0.
    static LstmParams initialized(int hidden, int input, int gate_depth, Rng& rng);

    void visit(const TensorVisitor& f);
    void visit(const ConstTensorVisitor& f) const;
    void set_zero();

    nlohmann::ordered_json to_json() const;
    static LstmParams from_json(const nlohmann::ordered_json& j);

    bool operator==(const LstmParams&) const = default;
};

/// Activations kept from a batched forward pass for backpropagation.
/// Step t of sample b lives in column t * batch + b of every matrix.
struct LstmTape {
    int steps = 0;
    int batch = 0;
    Matrix x;       ///< D x TB inputs
    Matrix c0;      ///< H x B
    Matrix gates;   ///< 4H x TB post-nonlinearity (i, f, o sigmoid; candidate tanh)
    Matrix cell;    ///< H x TB c_t
    Matrix tanh_c;  ///< H x TB
    std::vector<Matrix> depth_act;  ///< per extra layer: 4H x TB, tanh of the layer input
};

struct LstmBatchResult {
    Matrix theta_last;  ///< H x B; zero for an empty sequence
    Matrix c_last;      ///< H x B
};

/// Runs `steps` steps over `batch` sequences laid out as described in
/// LstmTape. Fills `tape` when non-null.
LstmBatchResult lstm_forward_batch(const LstmParams& p, const Matrix& x, int batch, const Matrix& c0,
                                   LstmTape* tape = nullptr);

struct BackwardHooks {
    /// Negative control for gradient checking: drops the U^T dz term of the
    /// recurrent path so the analytic gradient is wrong.
    bool drop_recurrent_path = false;
};

/// Backpropagates gradients w.r.t. the last theta and last cell state through
/// the whole sequence. Accumulates into `grads` (shaped like `p`) and
/// returns the gradient w.r.t. c0.
Matrix lstm_backward_batch(const LstmParams& p, const LstmTape& tape, const Matrix& dtheta_last,
                           const Matrix& dc_last, LstmParams& grads, const BackwardHooks& hooks = {});

struct StepResult {
    Vector c;
    Vector theta;
};

StepResult lstm_step(const LstmParams& p, const Vector& x, const Vector& c_prev);

struct SequenceResult {
    std::vector<Vector> outputs;
    Vector c_final;
};

SequenceResult lstm_forward(const LstmParams& p, std::span<const Vector> sequence, const Vector& c0);

}  // namespace trafprof::nn
