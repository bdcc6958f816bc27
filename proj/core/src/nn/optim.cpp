#include "trafprof/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "trafprof/error.hpp"

namespace trafprof::nn {

void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, const AdamConfig& cfg, long t) {
    if (t < 1) throw std::invalid_argument{"Adam step counter starts at 1"};
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    param.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
}

void Adam::step(std::span<Matrix* const> params, std::span<Matrix* const> grads) {
    if (params.size() != grads.size()) throw ShapeMismatch{"Adam: parameter/gradient count mismatch"};
    if (m_.empty()) {
        for (const Matrix* p : params) {
            m_.push_back(Matrix::Zero(p->rows(), p->cols()));
            v_.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    }
    if (m_.size() != params.size()) throw ShapeMismatch{"Adam: tensor list changed between steps"};
    ++t_;
    for (std::size_t k = 0; k < params.size(); ++k) adam_update(*params[k], *grads[k], m_[k], v_[k], cfg_, t_);
}

double global_norm(std::span<Matrix* const> grads) {
    double sq = 0.0;
    for (const Matrix* g : grads) sq += g->squaredNorm();
    return std::sqrt(sq);
}

double clip_global_norm(std::span<Matrix* const> grads, double max_norm) {
    const double norm = global_norm(grads);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (Matrix* g : grads) *g *= scale;
    }
    return norm;
}

}  // namespace trafprof::nn
