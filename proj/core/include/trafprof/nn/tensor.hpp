#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "trafprof/rng.hpp"

namespace trafprof::nn {

/// Every parameter tensor is a column-major double matrix; vectors are n x 1.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using TensorVisitor = std::function<void(std::string_view name, Matrix& tensor)>;
using ConstTensorVisitor = std::function<void(std::string_view name, const Matrix& tensor)>;

void fill_uniform(Matrix& m, double bound, Rng& rng);

/// `{"shape": [rows, cols], "data": [row-major values]}`
nlohmann::ordered_json tensor_to_json(const Matrix& m);
Matrix tensor_from_json(const nlohmann::ordered_json& j);

bool all_finite(const Matrix& m);

/// Elementwise tanh as 2 / (1 + exp(-2x)) - 1. Eigen only vectorizes exp
/// for doubles; absolute error stays within a few ulps of 1 and tanh(0) is
/// exactly 0.
template <typename Derived>
auto vtanh(const Eigen::ArrayBase<Derived>& x) {
    return 2.0 / (1.0 + (-2.0 * x).exp()) - 1.0;
}

}  // namespace trafprof::nn
