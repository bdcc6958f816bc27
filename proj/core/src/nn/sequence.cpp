#include "trafprof/nn/sequence.hpp"

#include <algorithm>
#include <cmath>

namespace trafprof::nn {

SequenceClassifier SequenceClassifier::zeros(int hidden, int input, int classes, int gate_depth) {
    return {LstmParams::zeros(hidden, input, gate_depth), DenseParams::zeros(classes, hidden)};
}

SequenceClassifier SequenceClassifier::initialized(int hidden, int input, int classes, int gate_depth, Rng& rng) {
    SequenceClassifier m;
    m.cell = LstmParams::initialized(hidden, input, gate_depth, rng);
    m.head = DenseParams::initialized(classes, hidden, rng);
    return m;
}

void SequenceClassifier::visit(const TensorVisitor& f) {
    cell.visit([&](std::string_view name, Matrix& t) { f(std::string{"cell."}.append(name), t); });
    head.visit([&](std::string_view name, Matrix& t) { f(std::string{"head."}.append(name), t); });
}

void SequenceClassifier::set_zero() {
    cell.set_zero();
    head.set_zero();
}

double sequence_loss(const SequenceClassifier& model, const Matrix& sequence, int label) {
    const Matrix c0 = Matrix::Zero(model.cell.hidden(), 1);
    const auto r = lstm_forward_batch(model.cell, sequence, 1, c0);
    return softmax_xent(model.head.forward(r.theta_last).col(0), label).loss;
}

SequenceGrads bptt_grads(const SequenceClassifier& model, const Matrix& sequence, int label,
                         const BackwardHooks& hooks) {
    const int h = model.cell.hidden();
    const Matrix c0 = Matrix::Zero(h, 1);
    LstmTape tape;
    const auto r = lstm_forward_batch(model.cell, sequence, 1, c0, &tape);
    const auto x = softmax_xent(model.head.forward(r.theta_last).col(0), label);

    SequenceGrads out{x.loss, SequenceClassifier::zeros(h, model.cell.input(), model.head.outputs(),
                                                        model.cell.gate_depth())};
    const Matrix dtheta = model.head.backward(r.theta_last, x.dlogits, out.grads.head);
    lstm_backward_batch(model.cell, tape, dtheta, Matrix::Zero(h, 1), out.grads.cell, hooks);
    return out;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
    return std::abs(analytic - numeric) / denom;
}

double GradCheckReport::max_rel_error() const {
    double m = 0.0;
    for (const auto& t : tensors) m = std::max(m, t.max_rel_error);
    return m;
}

GradCheckReport gradient_check(const SequenceClassifier& model, const Matrix& sequence, int label, double eps,
                               const BackwardHooks& hooks) {
    auto analytic = bptt_grads(model, sequence, label, hooks).grads;
    return check_gradients<SequenceClassifier>(
        model, std::move(analytic), [&](const SequenceClassifier& m) { return sequence_loss(m, sequence, label); },
        eps);
}

}  // namespace trafprof::nn
