#include <cmath>
#include <random>

#include "doctest.h"
#include "trafprof/baselines/ensemble.hpp"
#include "trafprof/error.hpp"
#include "trafprof/rng.hpp"

using namespace trafprof;
using nn::Matrix;
using nn::Vector;

namespace {

std::vector<PacketSummary> random_packets(std::size_t n, Rng& rng) {
    std::uniform_int_distribution<std::uint32_t> size{40, 1514};
    std::bernoulli_distribution dir{0.4};
    std::vector<PacketSummary> out(n);
    for (auto& p : out) {
        p.size = size(rng);
        p.outgoing = dir(rng);
    }
    return out;
}

struct Direct {
    double n = 0, mean = 0, std = 0, min = 0, max = 0;
};

/// Two-pass mean / population std straight from the sizes.
Direct direct(const std::vector<PacketSummary>& ps, int which) {
    std::vector<double> v;
    for (const auto& p : ps) {
        if (which == 0 || (which == 1 && !p.outgoing) || (which == 2 && p.outgoing)) v.push_back(p.size);
    }
    Direct d;
    if (v.empty()) return d;
    d.n = static_cast<double>(v.size());
    for (double x : v) d.mean += x;
    d.mean /= d.n;
    double ss = 0.0;
    for (double x : v) ss += (x - d.mean) * (x - d.mean);
    d.std = std::sqrt(ss / d.n);
    d.min = *std::min_element(v.begin(), v.end());
    d.max = *std::max_element(v.begin(), v.end());
    return d;
}

bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1.0});
}

}  // namespace

TEST_CASE("flow statistics") {
    SUBCASE("empty stream") {
        const auto s = compute_stats({});
        CHECK(s.full.empty());
        CHECK(s.full.sum == 0.0);
        for (double f : stats_to_features(s)) CHECK(f == 0.0);
    }
    SUBCASE("one packet per direction") {
        std::vector<PacketSummary> ps{{0, 0, true, 100}, {0, 1, false, 300}};
        const auto s = compute_stats(ps);
        CHECK(s.full.n == 2);
        CHECK(s.full.mean() == 200.0);
        CHECK(s.incoming.n == 1);
        CHECK(s.outgoing.n == 1);
    }
    SUBCASE("single outgoing packet features") {
        std::vector<PacketSummary> ps{{0, 0, true, 100}};
        const auto f = stats_to_features(compute_stats(ps));
        CHECK(f[10] == 100.0);
        CHECK(f[11] == 0.0);
        CHECK(f[12] == 100.0);
        CHECK(f[13] == 100.0);
        CHECK(f[14] == 1.0);
        for (int k = 5; k < 10; ++k) CHECK(f[k] == 0.0);
    }
    SUBCASE("random streams match direct computation") {
        Rng rng = make_rng(1, "stats");
        for (int trial = 0; trial < 50; ++trial) {
            const auto ps = random_packets(1000, rng);
            const auto f = stats_to_features(compute_stats(ps));
            for (int which = 0; which < 3; ++which) {
                const auto d = direct(ps, which);
                CHECK(rel_close(f[which * 5 + 0], d.mean, 1e-9));
                CHECK(rel_close(f[which * 5 + 1], d.std, 1e-9));
                CHECK(f[which * 5 + 2] == d.min);
                CHECK(f[which * 5 + 3] == d.max);
                CHECK(f[which * 5 + 4] == d.n);
            }
            const auto s = compute_stats(ps);
            CHECK(s.full.n == s.incoming.n + s.outgoing.n);
            CHECK(s.full.sum * s.full.sum <= static_cast<double>(s.full.n) * s.full.sum_sq);
            CHECK(s.full.min <= s.full.mean());
            CHECK(s.full.mean() <= s.full.max);
        }
    }
    SUBCASE("merge identities") {
        Rng rng = make_rng(2, "stats");
        const auto a = compute_stats(random_packets(30, rng));
        CHECK(merge_stats(a, FlowStats{}) == a);
        CHECK(merge_stats(FlowStats{}, a) == a);
        const auto b = compute_stats(random_packets(7, rng));
        CHECK(merge_stats(a, b) == merge_stats(b, a));
    }
}

TEST_CASE("forest split matches exhaustive search") {
    Rng rng = make_rng(3, "split");
    std::uniform_real_distribution<double> u{0.0, 1.0};
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 100, d = 4, k = 3;
        Matrix x(n, d);
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            for (int f = 0; f < d; ++f) x(i, f) = std::round(u(rng) * 20.0) / 2.0;
            y[i] = static_cast<int>(u(rng) * k);
        }
        // Oracle: every feature, every midpoint, impurity by direct counting.
        double best = -1.0;
        for (int f = 0; f < d; ++f) {
            std::vector<double> vals(x.col(f).data(), x.col(f).data() + n);
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
                const double thr = (vals[v] + vals[v + 1]) / 2.0;
                double l[3] = {}, r[3] = {}, all[3] = {};
                for (int i = 0; i < n; ++i) (x(i, f) <= thr ? l : r)[y[i]] += 1, all[y[i]] += 1;
                auto g = [](const double* c) {
                    const double t = c[0] + c[1] + c[2];
                    return 1.0 - (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) / (t * t);
                };
                const double nl = l[0] + l[1] + l[2];
                const double dec = g(all) - (nl * g(l) + (n - nl) * g(r)) / n;
                best = std::max(best, dec);
            }
        }
        ForestConfig cfg{1, 1, d, false, 0};
        const auto forest = forest_train(x, y, k, cfg);
        const auto& root = forest.trees[0].nodes[0];
        REQUIRE_FALSE(root.is_leaf());
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        const int feats[] = {root.feature};
        const auto chosen = best_split(x, y, k, rows, feats);
        CHECK(std::abs(chosen->decrease - best) < 1e-12);
        CHECK(chosen->threshold == root.threshold);
        CHECK(forest.trees[0].depth() == 1);
    }
}

TEST_CASE("random forest") {
    Rng rng = make_rng(4, "forest");
    std::normal_distribution<double> noise{0.0, 0.3};
    const int n = 200;
    Matrix x(n, 5);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = i % 2;
        for (int f = 0; f < 5; ++f) x(i, f) = noise(rng) + (f < 2 ? 3.0 * y[i] : 0.0);
    }
    auto row = [&](int i) {
        std::vector<double> buf;
        for (int f = 0; f < 5; ++f) buf.push_back(x(i, f));
        return buf;
    };

    SUBCASE("separable blobs are fit exactly") {
        const auto m = forest_train(x, y, 2, ForestConfig{10, 6});
        int correct = 0;
        for (int i = 0; i < n; ++i) correct += m.predict(row(i)) == y[i];
        CHECK(correct == n);
        for (const auto& t : m.trees) CHECK(t.depth() <= 6);
    }
    SUBCASE("depth zero predicts the majority class") {
        std::vector<int> skewed = y;
        skewed[0] = skewed[2] = 1;  // 102 vs 98
        const auto m = forest_train(x, skewed, 2, ForestConfig{5, 0, 0, false});
        for (int i = 0; i < n; ++i) CHECK(m.predict(row(i)) == 1);
    }
    SUBCASE("seeded training is reproducible and thread-count independent") {
        ForestConfig cfg{8, 5};
        cfg.seed = 11;
        const auto a = forest_train(x, y, 2, cfg);
        cfg.threads = 3;
        const auto b = forest_train(x, y, 2, cfg);
        CHECK(a.trees == b.trees);
        cfg.seed = 12;
        CHECK_FALSE(forest_train(x, y, 2, cfg) == a);
    }
    SUBCASE("prediction does not depend on tree order") {
        auto m = forest_train(x, y, 2, ForestConfig{9, 3});
        std::vector<int> before;
        for (int i = 0; i < n; ++i) before.push_back(m.predict(row(i)));
        std::reverse(m.trees.begin(), m.trees.end());
        for (int i = 0; i < n; ++i) CHECK(m.predict(row(i)) == before[i]);
    }
    SUBCASE("single class gives constant trees") {
        std::vector<int> ones(n, 1);
        const auto m = forest_train(x, ones, 3, ForestConfig{3, 4});
        for (const auto& t : m.trees) CHECK(t.nodes.size() == 1);
        CHECK(m.predict(row(0)) == 1);
    }
    SUBCASE("json round-trip") {
        const auto m = forest_train(x, y, 2, ForestConfig{4, 4});
        const auto back = ForestModel::from_json(nlohmann::ordered_json::parse(m.to_json().dump()));
        CHECK(back == m);
    }
}

TEST_CASE("linear svm") {
    SUBCASE("1-D separable points") {
        Matrix x(4, 1);
        x << -1.0, -2.0, 1.0, 2.0;
        const std::vector<int> y{0, 0, 1, 1};
        const auto m = svm_train(x, y, 2, SvmConfig{});
        const double lo[] = {-1.5};
        const double hi[] = {1.5};
        CHECK(m.predict(lo) == 0);
        CHECK(m.predict(hi) == 1);
    }
    SUBCASE("duplicating the data leaves the objective unchanged") {
        Rng rng = make_rng(5, "svm");
        Matrix x(20, 3);
        nn::fill_uniform(x, 2.0, rng);
        std::vector<int> y(20);
        for (int i = 0; i < 20; ++i) y[i] = i % 2 ? 1 : -1;
        Matrix x2(40, 3);
        x2 << x, x;
        std::vector<int> y2 = y;
        y2.insert(y2.end(), y.begin(), y.end());
        Vector w = Vector::LinSpaced(3, -0.3, 0.4);
        CHECK(svm_objective(w, 0.1, x, y, 0.01) == doctest::Approx(svm_objective(w, 0.1, x2, y2, 0.01)).epsilon(1e-14));
    }
    SUBCASE("subgradient matches finite differences away from kinks") {
        Rng rng = make_rng(6, "svm");
        Matrix x(30, 4);
        nn::fill_uniform(x, 1.0, rng);
        std::vector<int> y(30);
        for (int i = 0; i < 30; ++i) y[i] = i % 3 ? 1 : -1;
        Vector w(4);
        w << 0.3, -0.7, 0.2, 0.5;
        const double b = 0.05, lambda = 0.1, eps = 1e-7;
        Vector gw;
        double gb = 0.0;
        svm_subgradient(w, b, x, y, lambda, gw, gb);
        for (int k = 0; k < 4; ++k) {
            Vector wp = w, wm = w;
            wp(k) += eps;
            wm(k) -= eps;
            const double num = (svm_objective(wp, b, x, y, lambda) - svm_objective(wm, b, x, y, lambda)) / (2 * eps);
            CHECK(std::abs(num - gw(k)) < 1e-6);
        }
        const double num_b =
            (svm_objective(w, b + eps, x, y, lambda) - svm_objective(w, b - eps, x, y, lambda)) / (2 * eps);
        CHECK(std::abs(num_b - gb) < 1e-6);
    }
    SUBCASE("multi-class blobs, json round-trip, single class rejected") {
        Rng rng = make_rng(7, "svm");
        std::normal_distribution<double> noise{0.0, 0.2};
        Matrix x(90, 2);
        std::vector<int> y(90);
        for (int i = 0; i < 90; ++i) {
            y[i] = i % 3;
            x(i, 0) = noise(rng) + 2.0 * std::cos(2.1 * y[i]);
            x(i, 1) = noise(rng) + 2.0 * std::sin(2.1 * y[i]);
        }
        const auto m = svm_train(x, y, 3, SvmConfig{});
        int correct = 0;
        for (int i = 0; i < 90; ++i) {
            const double r[] = {x(i, 0), x(i, 1)};
            correct += m.predict(r) == y[i];
        }
        CHECK(correct >= 88);
        CHECK(m.w.allFinite());
        CHECK(LinearSvmModel::from_json(nlohmann::ordered_json::parse(m.to_json().dump())) == m);
        CHECK_THROWS_AS(svm_train(x, std::vector<int>(90, 1), 3, SvmConfig{}), EmptyClass);
    }
}

TEST_CASE("baseline ensemble") {
    const Taxonomy tax{{{"a", {"x", "y"}}, {"b", {"none"}}}};
    std::vector<LabeledSample> samples;
    for (int i = 0; i < 60; ++i) {
        LabeledSample s;
        s.app = i % 3 == 2 ? 1 : 0;
        s.activity = s.app == 0 ? i % 3 : 0;
        const std::uint32_t base = s.app == 0 ? (s.activity == 0 ? 200 : 900) : 1400;
        for (int p = 0; p < 10; ++p) s.packets.push_back({0, 0, p % 2 == 0, base + static_cast<std::uint32_t>(p)});
        samples.push_back(std::move(s));
    }
    for (auto kind : {BaselineKind::forest, BaselineKind::svm}) {
        BaselineConfig cfg;
        cfg.kind = kind;
        const auto m = baseline_train(tax, samples, cfg);
        CHECK(m.activity.size() == 1);
        for (const auto& s : samples) {
            const auto p = baseline_predict(m, s);
            CHECK(p.app == s.app);
            if (s.app == 0) CHECK(p.activity == s.activity);
        }
        const auto back = BaselineEnsemble::from_json(nlohmann::ordered_json::parse(m.to_json().dump()));
        CHECK(back.to_json() == m.to_json());
    }
}
