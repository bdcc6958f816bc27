#pragma once

#include <functional>
#include <string>
#include <vector>

#include "trafprof/nn/dense.hpp"
#include "trafprof/nn/lstm.hpp"

namespace trafprof::nn {

/// One LSTM cell followed by a softmax head on the final theta.
struct SequenceClassifier {
    LstmParams cell;
    DenseParams head;

    static SequenceClassifier zeros(int hidden, int input, int classes, int gate_depth = 1);
    static SequenceClassifier initialized(int hidden, int input, int classes, int gate_depth, Rng& rng);

    /// Tensors prefixed "cell." and "head.".
    void visit(const TensorVisitor& f);
    void set_zero();
};

/// Loss of one D x T sequence (one column per step) against `label`.
double sequence_loss(const SequenceClassifier& model, const Matrix& sequence, int label);

struct SequenceGrads {
    double loss = 0.0;
    SequenceClassifier grads;
};

/// Exact reverse-mode gradients of the cross-entropy loss.
SequenceGrads bptt_grads(const SequenceClassifier& model, const Matrix& sequence, int label,
                         const BackwardHooks& hooks = {});

struct TensorCheck {
    std::string name;
    std::size_t entries = 0;
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    double eps = 0.0;
    std::vector<TensorCheck> tensors;

    double max_rel_error() const;
    bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

/// |analytic - numeric| / max(|analytic|, |numeric|, kRelErrorFloor). The
/// floor keeps entries whose true gradient is ~0 from dividing roundoff by
/// roundoff.
inline constexpr double kRelErrorFloor = 1e-6;
double relative_error(double analytic, double numeric);

/// Compares analytic gradients against central differences over every
/// entry of every tensor of `model`.
template <typename Model>
GradCheckReport check_gradients(const Model& model, Model analytic, const std::function<double(const Model&)>& loss,
                                double eps) {
    Model probe = model;
    std::vector<std::pair<std::string, Matrix*>> probe_tensors;
    std::vector<Matrix*> grad_tensors;
    probe.visit([&](std::string_view name, Matrix& t) { probe_tensors.emplace_back(std::string{name}, &t); });
    analytic.visit([&](std::string_view, Matrix& t) { grad_tensors.push_back(&t); });

    GradCheckReport report;
    report.eps = eps;
    for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
        auto& [name, tensor] = probe_tensors[k];
        TensorCheck check{name, static_cast<std::size_t>(tensor->size())};
        for (Eigen::Index e = 0; e < tensor->size(); ++e) {
            double& w = tensor->data()[e];
            const double saved = w;
            w = saved + eps;
            const double up = loss(probe);
            w = saved - eps;
            const double down = loss(probe);
            w = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = grad_tensors[k]->data()[e];
            check.max_abs_error = std::max(check.max_abs_error, std::abs(a - numeric));
            check.max_rel_error = std::max(check.max_rel_error, relative_error(a, numeric));
        }
        report.tensors.push_back(std::move(check));
    }
    return report;
}

GradCheckReport gradient_check(const SequenceClassifier& model, const Matrix& sequence, int label, double eps,
                               const BackwardHooks& hooks = {});

}  // namespace trafprof::nn
