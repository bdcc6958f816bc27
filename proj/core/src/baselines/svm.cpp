#include "trafprof/baselines/svm.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "trafprof/error.hpp"
#include "trafprof/rng.hpp"

namespace trafprof {

using nn::Matrix;
using nn::Vector;

double svm_objective(const Vector& w, double b, const FeatureMatrix& x, std::span<const int> y, double lambda) {
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        hinge += std::max(0.0, 1.0 - y[i] * (x.row(i).dot(w) + b));
    }
    return 0.5 * lambda * w.squaredNorm() + (x.rows() > 0 ? hinge / static_cast<double>(x.rows()) : 0.0);
}

void svm_subgradient(const Vector& w, double b, const FeatureMatrix& x, std::span<const int> y, double lambda,
                     Vector& grad_w, double& grad_b) {
    grad_w = lambda * w;
    grad_b = 0.0;
    if (x.rows() == 0) return;
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (y[i] * (x.row(i).dot(w) + b) < 1.0) {
            grad_w -= (inv_n * y[i]) * x.row(i).transpose();
            grad_b -= inv_n * y[i];
        }
    }
}

Vector LinearSvmModel::decision(std::span<const double> row) const {
    if (static_cast<Eigen::Index>(row.size()) != mean.size()) throw ShapeMismatch{"svm input has the wrong width"};
    const Vector z = (Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())) - mean).cwiseQuotient(scale);
    return w * z + b;
}

int LinearSvmModel::predict(std::span<const double> row) const {
    const Vector d = decision(row);
    int best = 0;
    for (int k = 1; k < d.size(); ++k) {
        if (d(k) > d(best)) best = k;
    }
    return best;
}

nlohmann::ordered_json LinearSvmModel::to_json() const {
    nlohmann::ordered_json j;
    j["model"] = "linear_svm";
    j["n_classes"] = n_classes;
    j["lambda"] = config.lambda;
    j["epochs"] = config.epochs;
    j["seed"] = config.seed;
    j["mean"] = nn::tensor_to_json(mean);
    j["scale"] = nn::tensor_to_json(scale);
    j["w"] = nn::tensor_to_json(w);
    j["b"] = nn::tensor_to_json(b);
    return j;
}

LinearSvmModel LinearSvmModel::from_json(const nlohmann::ordered_json& j) {
    LinearSvmModel m;
    m.n_classes = j.at("n_classes").get<int>();
    m.config.lambda = j.at("lambda").get<double>();
    m.config.epochs = j.at("epochs").get<int>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.mean = nn::tensor_from_json(j.at("mean"));
    m.scale = nn::tensor_from_json(j.at("scale"));
    m.w = nn::tensor_from_json(j.at("w"));
    m.b = nn::tensor_from_json(j.at("b"));
    if (m.w.rows() != m.n_classes || m.b.size() != m.n_classes || m.w.cols() != m.mean.size() ||
        m.scale.size() != m.mean.size()) {
        throw DataError{"svm tensors have inconsistent shapes"};
    }
    if (!m.w.allFinite() || !m.b.allFinite()) throw DataError{"svm weights are not finite"};
    return m;
}

LinearSvmModel svm_train(const FeatureMatrix& x, std::span<const int> y, int n_classes, const SvmConfig& cfg) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeMismatch{"feature rows and labels differ in count"};
    if (cfg.lambda <= 0.0 || cfg.epochs < 0) throw BadConfig{"svm needs lambda > 0 and epochs >= 0"};
    std::vector<int> present(static_cast<std::size_t>(n_classes), 0);
    for (int label : y) present.at(label) = 1;
    if (std::accumulate(present.begin(), present.end(), 0) < 2) throw EmptyClass{"svm needs at least two classes"};

    LinearSvmModel m;
    m.n_classes = n_classes;
    m.config = cfg;
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    m.mean = x.colwise().mean().transpose();
    m.scale = ((x.rowwise() - m.mean.transpose()).array().square().colwise().mean().sqrt()).transpose();
    for (Eigen::Index k = 0; k < d; ++k) {
        if (!(m.scale(k) > 0.0)) m.scale(k) = 1.0;
    }
    const Matrix z = (x.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array();

    m.w = Matrix::Zero(n_classes, d);
    m.b = Vector::Zero(n_classes);
    const double t0 = 1.0 / cfg.lambda;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (int k = 0; k < n_classes; ++k) {
        Rng rng = make_rng(cfg.seed, fmt::format("svm/class/{}", k));
        Vector w = Vector::Zero(d);
        double b = 0.0;
        double t = 0.0;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::shuffle(order.begin(), order.end(), rng);
            for (auto i : order) {
                const double eta = 1.0 / (cfg.lambda * (t + t0));
                const double yi = y[i] == k ? 1.0 : -1.0;
                const bool violated = yi * (z.row(i).dot(w) + b) < 1.0;
                w *= 1.0 - eta * cfg.lambda;
                if (violated) {
                    w += (eta * yi) * z.row(i).transpose();
                    b += eta * yi;
                }
                t += 1.0;
            }
        }
        m.w.row(k) = w.transpose();
        m.b(k) = b;
    }
    return m;
}

}  // namespace trafprof
