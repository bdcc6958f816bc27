#include "trafprof/nn/lstm.hpp"

#include <cmath>

#include <fmt/format.h>

#include "trafprof/error.hpp"

namespace trafprof::nn {

namespace {

constexpr const char* kGateOrder[kGateCount] = {"input", "forget", "output", "candidate"};

/// out.block(g) = V.block(g) * a.block(g) for each gate row block.
void gate_blockwise(const Matrix& v, const Matrix& a, Matrix& out, int hidden) {
    out.resize(v.rows(), a.cols());
    for (int g = 0; g < kGateCount; ++g) {
        out.middleRows(g * hidden, hidden).noalias() = v.middleRows(g * hidden, hidden) * a.middleRows(g * hidden, hidden);
    }
}

/// Applies the sigmoid / tanh gate nonlinearities in place.
void activate_gates(Matrix& z, int hidden) {
    auto sig = z.topRows(3 * hidden).array();
    sig = 1.0 / (1.0 + (-sig).exp());
    auto cand = z.bottomRows(hidden).array();
    cand = vtanh(cand);
}

void check_shapes(const LstmParams& p) {
    const auto h = p.U.cols();
    if (p.U.rows() != 4 * h || p.W.rows() != 4 * h || p.b.rows() != 4 * h || p.b.cols() != 1) {
        throw ShapeMismatch{"inconsistent LSTM parameter shapes"};
    }
    if (p.depth_weights.size() != p.depth_bias.size()) throw ShapeMismatch{"depth weight/bias count mismatch"};
    for (std::size_t k = 0; k < p.depth_weights.size(); ++k) {
        if (p.depth_weights[k].rows() != 4 * h || p.depth_weights[k].cols() != h || p.depth_bias[k].rows() != 4 * h ||
            p.depth_bias[k].cols() != 1) {
            throw ShapeMismatch{"inconsistent gate depth layer shapes"};
        }
    }
}

}  // namespace

LstmParams LstmParams::zeros(int hidden, int input, int gate_depth) {
    if (hidden < 1 || input < 0 || gate_depth < 1) throw std::invalid_argument{"bad LSTM dimensions"};
    LstmParams p;
    p.W = Matrix::Zero(4 * hidden, input);
    p.U = Matrix::Zero(4 * hidden, hidden);
    p.b = Matrix::Zero(4 * hidden, 1);
    for (int k = 1; k < gate_depth; ++k) {
        p.depth_weights.push_back(Matrix::Zero(4 * hidden, hidden));
        p.depth_bias.push_back(Matrix::Zero(4 * hidden, 1));
    }
    return p;
}

LstmParams LstmParams::initialized(int hidden, int input, int gate_depth, Rng& rng) {
    LstmParams p = zeros(hidden, input, gate_depth);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill_uniform(p.W, bound, rng);
    fill_uniform(p.U, bound, rng);
    for (auto& v : p.depth_weights) fill_uniform(v, bound, rng);
    Matrix& last_bias = p.depth_bias.empty() ? p.b : p.depth_bias.back();
    last_bias.middleRows(kForgetGate * hidden, hidden).setConstant(1.0);
    return p;
}

void LstmParams::visit(const TensorVisitor& f) {
    f("W", W);
    f("U", U);
    f("b", b);
    for (std::size_t k = 0; k < depth_weights.size(); ++k) {
        f(fmt::format("V{}", k + 1), depth_weights[k]);
        f(fmt::format("e{}", k + 1), depth_bias[k]);
    }
}

void LstmParams::visit(const ConstTensorVisitor& f) const {
    const_cast<LstmParams*>(this)->visit([&](std::string_view name, Matrix& t) { f(name, t); });
}

void LstmParams::set_zero() {
    visit([](std::string_view, Matrix& t) { t.setZero(); });
}

nlohmann::ordered_json LstmParams::to_json() const {
    nlohmann::ordered_json j;
    j["hidden"] = hidden();
    j["input"] = input();
    j["gate_depth"] = gate_depth();
    j["gate_order"] = {kGateOrder[0], kGateOrder[1], kGateOrder[2], kGateOrder[3]};
    nlohmann::ordered_json tensors;
    visit([&](std::string_view name, const Matrix& t) { tensors[std::string{name}] = tensor_to_json(t); });
    j["tensors"] = std::move(tensors);
    return j;
}

LstmParams LstmParams::from_json(const nlohmann::ordered_json& j) {
    LstmParams p = zeros(j.at("hidden").get<int>(), j.at("input").get<int>(), j.at("gate_depth").get<int>());
    const auto& tensors = j.at("tensors");
    p.visit([&](std::string_view name, Matrix& t) {
        Matrix loaded = tensor_from_json(tensors.at(std::string{name}));
        if (loaded.rows() != t.rows() || loaded.cols() != t.cols()) {
            throw DataError{fmt::format("tensor {} has the wrong shape", name)};
        }
        t = std::move(loaded);
    });
    return p;
}

LstmBatchResult lstm_forward_batch(const LstmParams& p, const Matrix& x, int batch, const Matrix& c0,
                                   LstmTape* tape) {
    check_shapes(p);
    const int h = p.hidden();
    if (batch < 1 || x.rows() != p.input() || x.cols() % batch != 0 || c0.rows() != h || c0.cols() != batch) {
        throw ShapeMismatch{fmt::format("LSTM input {}x{} (batch {}) / state {}x{} do not match H={}, D={}", x.rows(),
                                        x.cols(), batch, c0.rows(), c0.cols(), h, p.input())};
    }
    const int steps = static_cast<int>(x.cols() / batch);
    const int depth_layers = static_cast<int>(p.depth_weights.size());

    if (tape) {
        tape->steps = steps;
        tape->batch = batch;
        tape->x = x;
        tape->c0 = c0;
        tape->gates.resize(4 * h, x.cols());
        tape->cell.resize(h, x.cols());
        tape->tanh_c.resize(h, x.cols());
        tape->depth_act.assign(depth_layers, Matrix(4 * h, x.cols()));
    }

    LstmBatchResult out{Matrix::Zero(h, batch), c0};
    if (steps == 0) return out;

    const Matrix wx = p.W * x;
    Matrix z(4 * h, batch);
    Matrix a;
    Matrix tc(h, batch);
    Matrix& c = out.c_last;
    for (int t = 0; t < steps; ++t) {
        z.noalias() = p.U * c;
        z += wx.middleCols(t * batch, batch);
        z.colwise() += p.b.col(0);
        for (int k = 0; k < depth_layers; ++k) {
            a = vtanh(z.array());
            if (tape) tape->depth_act[k].middleCols(t * batch, batch) = a;
            gate_blockwise(p.depth_weights[k], a, z, h);
            z.colwise() += p.depth_bias[k].col(0);
        }
        activate_gates(z, h);
        const auto i = z.middleRows(kInputGate * h, h).array();
        const auto f = z.middleRows(kForgetGate * h, h).array();
        const auto g = z.middleRows(kCandidate * h, h).array();
        c = (f * c.array() + i * g).matrix();
        tc = vtanh(c.array());
        if (tape) {
            tape->gates.middleCols(t * batch, batch) = z;
            tape->cell.middleCols(t * batch, batch) = c;
            tape->tanh_c.middleCols(t * batch, batch) = tc;
        }
    }
    out.theta_last = (z.middleRows(kOutputGate * h, h).array() * tc.array()).matrix();
    return out;
}

Matrix lstm_backward_batch(const LstmParams& p, const LstmTape& tape, const Matrix& dtheta_last,
                           const Matrix& dc_last, LstmParams& grads, const BackwardHooks& hooks) {
    const int h = p.hidden();
    const int batch = tape.batch;
    const int steps = tape.steps;
    if (dtheta_last.rows() != h || dtheta_last.cols() != batch || dc_last.rows() != h || dc_last.cols() != batch) {
        throw ShapeMismatch{"LSTM backward gradient shape mismatch"};
    }
    Matrix dc = dc_last;
    if (steps == 0) return dc;

    const int depth_layers = static_cast<int>(p.depth_weights.size());
    const Eigen::Index total = tape.x.cols();
    Matrix dz_all(4 * h, total);
    Matrix dz(4 * h, batch);
    Matrix da;
    Matrix dc_total(h, batch);

    for (int t = steps - 1; t >= 0; --t) {
        const Eigen::Index col = static_cast<Eigen::Index>(t) * batch;
        const auto gates = tape.gates.middleCols(col, batch);
        const auto i = gates.middleRows(kInputGate * h, h).array();
        const auto f = gates.middleRows(kForgetGate * h, h).array();
        const auto o = gates.middleRows(kOutputGate * h, h).array();
        const auto g = gates.middleRows(kCandidate * h, h).array();
        const auto tc = tape.tanh_c.middleCols(col, batch).array();
        const auto c_prev = (t > 0 ? tape.cell.middleCols(col - batch, batch) : tape.c0.middleCols(0, batch)).array();

        if (t == steps - 1) {
            const auto dtheta = dtheta_last.array();
            dc_total = (dc.array() + dtheta * o * (1.0 - tc.square())).matrix();
            dz.middleRows(kOutputGate * h, h) = (dtheta * tc * o * (1.0 - o)).matrix();
        } else {
            dc_total = dc;
            dz.middleRows(kOutputGate * h, h).setZero();
        }
        const auto dct = dc_total.array();
        dz.middleRows(kInputGate * h, h) = (dct * g * i * (1.0 - i)).matrix();
        dz.middleRows(kForgetGate * h, h) = (dct * c_prev * f * (1.0 - f)).matrix();
        dz.middleRows(kCandidate * h, h) = (dct * i * (1.0 - g.square())).matrix();

        for (int k = depth_layers - 1; k >= 0; --k) {
            const auto a = tape.depth_act[k].middleCols(col, batch);
            const Matrix& v = p.depth_weights[k];
            for (int gi = 0; gi < kGateCount; ++gi) {
                grads.depth_weights[k].middleRows(gi * h, h).noalias() +=
                    dz.middleRows(gi * h, h) * a.middleRows(gi * h, h).transpose();
            }
            grads.depth_bias[k] += dz.rowwise().sum();
            da.resize(4 * h, batch);
            for (int gi = 0; gi < kGateCount; ++gi) {
                da.middleRows(gi * h, h).noalias() = v.middleRows(gi * h, h).transpose() * dz.middleRows(gi * h, h);
            }
            dz = (da.array() * (1.0 - a.array().square())).matrix();
        }
        dz_all.middleCols(col, batch) = dz;

        dc = (dct * f).matrix();
        if (!hooks.drop_recurrent_path) dc.noalias() += p.U.transpose() * dz;
    }

    Matrix c_prev_all(h, total);
    c_prev_all.leftCols(batch) = tape.c0;
    if (steps > 1) c_prev_all.rightCols(total - batch) = tape.cell.leftCols(total - batch);
    grads.W.noalias() += dz_all * tape.x.transpose();
    grads.U.noalias() += dz_all * c_prev_all.transpose();
    grads.b += dz_all.rowwise().sum();
    return dc;
}

StepResult lstm_step(const LstmParams& p, const Vector& x, const Vector& c_prev) {
    std::vector<Vector> seq{x};
    auto r = lstm_forward(p, seq, c_prev);
    return {std::move(r.c_final), std::move(r.outputs.front())};
}

SequenceResult lstm_forward(const LstmParams& p, std::span<const Vector> sequence, const Vector& c0) {
    check_shapes(p);
    SequenceResult out;
    out.c_final = c0;
    if (c0.size() != p.hidden()) throw ShapeMismatch{"initial cell state has the wrong size"};
    for (const auto& x : sequence) {
        if (x.size() != p.input()) throw ShapeMismatch{"sequence entry has the wrong size"};
        auto r = lstm_forward_batch(p, x, 1, out.c_final);
        out.c_final = r.c_last.col(0);
        out.outputs.emplace_back(r.theta_last.col(0));
    }
    return out;
}

}  // namespace trafprof::nn
