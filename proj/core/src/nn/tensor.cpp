#include "trafprof/nn/tensor.hpp"

#include <random>

#include "trafprof/error.hpp"

namespace trafprof::nn {

void fill_uniform(Matrix& m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist{-bound, bound};
    // Row-major fill order so the draw sequence matches the serialized layout.
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
}

nlohmann::ordered_json tensor_to_json(const Matrix& m) {
    nlohmann::ordered_json data = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    nlohmann::ordered_json j;
    j["shape"] = {m.rows(), m.cols()};
    j["data"] = std::move(data);
    return j;
}

Matrix tensor_from_json(const nlohmann::ordered_json& j) {
    const auto& shape = j.at("shape");
    const auto& data = j.at("data");
    if (shape.size() != 2) throw DataError{"tensor shape must have two entries"};
    const auto rows = shape[0].get<Eigen::Index>();
    const auto cols = shape[1].get<Eigen::Index>();
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
        throw DataError{"tensor data does not match its shape"};
    }
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    }
    return m;
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

}  // namespace trafprof::nn
