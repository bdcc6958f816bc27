#include "trafprof/nn/dense.hpp"

#include <cmath>
#include <span>

#include "trafprof/error.hpp"

namespace trafprof::nn {

DenseParams DenseParams::zeros(int outputs, int inputs) {
    return {Matrix::Zero(outputs, inputs), Matrix::Zero(outputs, 1)};
}

DenseParams DenseParams::initialized(int outputs, int inputs, Rng& rng) {
    DenseParams d = zeros(outputs, inputs);
    fill_uniform(d.W, 1.0 / std::sqrt(static_cast<double>(inputs)), rng);
    return d;
}

Matrix DenseParams::forward(const Matrix& h) const {
    if (h.rows() != W.cols()) throw ShapeMismatch{"dense input has the wrong size"};
    Matrix out = W * h;
    out.colwise() += b.col(0);
    return out;
}

Matrix DenseParams::backward(const Matrix& h, const Matrix& dlogits, DenseParams& grads) const {
    grads.W.noalias() += dlogits * h.transpose();
    grads.b += dlogits.rowwise().sum();
    return W.transpose() * dlogits;
}

void DenseParams::visit(const TensorVisitor& f) {
    f("W", W);
    f("b", b);
}

void DenseParams::set_zero() {
    W.setZero();
    b.setZero();
}

nlohmann::ordered_json DenseParams::to_json() const {
    nlohmann::ordered_json j;
    j["outputs"] = outputs();
    j["inputs"] = inputs();
    j["tensors"] = {{"W", tensor_to_json(W)}, {"b", tensor_to_json(b)}};
    return j;
}

DenseParams DenseParams::from_json(const nlohmann::ordered_json& j) {
    DenseParams d{tensor_from_json(j.at("tensors").at("W")), tensor_from_json(j.at("tensors").at("b"))};
    if (d.b.rows() != d.W.rows() || d.b.cols() != 1) throw DataError{"dense tensors have inconsistent shapes"};
    return d;
}

Vector softmax(const Vector& logits) {
    const double mx = logits.maxCoeff();
    Vector e = (logits.array() - mx).exp().matrix();
    return e / e.sum();
}

Matrix softmax_columns(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) out.col(c) = softmax(logits.col(c));
    return out;
}

XentResult softmax_xent(const Vector& logits, int label) {
    if (label < 0 || label >= logits.size()) throw std::out_of_range{"label out of range"};
    const double mx = logits.maxCoeff();
    const Vector shifted = logits.array() - mx;
    const double lse = std::log(shifted.array().exp().sum());
    XentResult r{lse - shifted(label), (shifted.array() - lse).exp().matrix()};
    r.dlogits(label) -= 1.0;
    return r;
}

BatchXentResult softmax_xent_batch(const Matrix& logits, std::span<const int> labels) {
    if (static_cast<std::size_t>(logits.cols()) != labels.size()) throw ShapeMismatch{"one label per column expected"};
    BatchXentResult out{0.0, Matrix(logits.rows(), logits.cols())};
    const double scale = 1.0 / static_cast<double>(labels.size());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        auto r = softmax_xent(logits.col(c), labels[c]);
        out.loss += r.loss * scale;
        out.dlogits.col(c) = r.dlogits * scale;
    }
    return out;
}

}  // namespace trafprof::nn
