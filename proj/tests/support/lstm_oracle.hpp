#pragma once

// Straight-line scalar LSTM used as an independent check of the Eigen
// implementation. Reads parameters entry by entry; shares no code with
// the library's forward pass.

#include <cmath>
#include <vector>

#include "trafprof/nn/lstm.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline Vec to_vec(const Eigen::VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

struct Step {
    Vec c;
    Vec theta;
};

inline Step lstm_step(const trafprof::nn::LstmParams& p, const Vec& x, const Vec& c_prev) {
    const int h = p.hidden();
    const int d = p.input();
    Vec pre(4 * h);
    for (int r = 0; r < 4 * h; ++r) {
        double s = p.b(r, 0);
        for (int k = 0; k < d; ++k) s += p.W(r, k) * x[k];
        for (int k = 0; k < h; ++k) s += p.U(r, k) * c_prev[k];
        pre[r] = s;
    }
    for (std::size_t layer = 0; layer < p.depth_weights.size(); ++layer) {
        Vec next(4 * h);
        for (int gate = 0; gate < 4; ++gate) {
            for (int r = 0; r < h; ++r) {
                double s = p.depth_bias[layer](gate * h + r, 0);
                for (int k = 0; k < h; ++k) s += p.depth_weights[layer](gate * h + r, k) * std::tanh(pre[gate * h + k]);
                next[gate * h + r] = s;
            }
        }
        pre = next;
    }
    Step out{Vec(h), Vec(h)};
    for (int r = 0; r < h; ++r) {
        const double in = sigmoid(pre[r]);
        const double forget = sigmoid(pre[h + r]);
        const double outg = sigmoid(pre[2 * h + r]);
        const double cand = std::tanh(pre[3 * h + r]);
        out.c[r] = forget * c_prev[r] + in * cand;
        out.theta[r] = outg * std::tanh(out.c[r]);
    }
    return out;
}

/// Folds lstm_step over the columns of a D x T matrix.
inline Step lstm_sequence(const trafprof::nn::LstmParams& p, const Eigen::MatrixXd& seq, Vec c) {
    Step last{c, Vec(p.hidden(), 0.0)};
    for (Eigen::Index t = 0; t < seq.cols(); ++t) {
        Vec x(seq.rows());
        for (Eigen::Index k = 0; k < seq.rows(); ++k) x[k] = seq(k, t);
        last = lstm_step(p, x, last.c);
    }
    return last;
}

inline Vec dense(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b, const Vec& h) {
    Vec out(w.rows());
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        double s = b(r, 0);
        for (Eigen::Index k = 0; k < w.cols(); ++k) s += w(r, k) * h[k];
        out[r] = s;
    }
    return out;
}

inline Vec softmax(const Vec& z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    Vec e(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += (e[i] = std::exp(z[i] - mx));
    for (auto& v : e) v /= sum;
    return e;
}

}  // namespace oracle
