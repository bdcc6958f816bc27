#include "trafprof/baselines/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "trafprof/error.hpp"
#include "trafprof/rng.hpp"

namespace trafprof {

namespace {

int argmax_lowest(std::span<const double> v) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(v.size()); ++k) {
        if (v[k] > v[best]) best = k;
    }
    return best;
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const int> y, int n_classes, int max_depth, int max_features, Rng rng)
        : x_{x}, y_{y}, n_classes_{n_classes}, max_depth_{max_depth}, max_features_{max_features}, rng_{std::move(rng)} {
        features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(features_.begin(), features_.end(), 0);
    }

    DecisionTree build(std::vector<std::size_t> rows) {
        DecisionTree tree;
        grow(tree, rows, 0);
        return tree;
    }

private:
    int grow(DecisionTree& tree, std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::vector<double> hist(static_cast<std::size_t>(n_classes_), 0.0);
        for (auto r : rows) hist[y_[r]] += 1.0;
        tree.nodes[id].histogram = hist;

        const bool pure = std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0; }) <= 1;
        if (depth >= max_depth_ || pure || rows.size() < 2) return id;

        // Draw features in random order; evaluate the first max_features and
        // keep drawing only while none of them admits a split.
        std::shuffle(features_.begin(), features_.end(), rng_);
        std::optional<SplitChoice> split;
        for (std::size_t start = 0; start < features_.size() && !split;) {
            const std::size_t take = start == 0 ? static_cast<std::size_t>(max_features_) : 1;
            const auto end = std::min(features_.size(), start + take);
            split = best_split(x_, y_, n_classes_, rows, std::span<const int>{features_}.subspan(start, end - start));
            start = end;
        }
        if (!split) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            (x_(static_cast<Eigen::Index>(r), split->feature) <= split->threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        tree.nodes[id].feature = split->feature;
        tree.nodes[id].threshold = split->threshold;
        const int l = grow(tree, left, depth + 1);
        const int r = grow(tree, right, depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }

    const FeatureMatrix& x_;
    std::span<const int> y_;
    int n_classes_;
    int max_depth_;
    int max_features_;
    Rng rng_;
    std::vector<int> features_;
};

nlohmann::ordered_json node_to_json(const DecisionTree& tree, int id) {
    const auto& n = tree.nodes[id];
    nlohmann::ordered_json j;
    if (n.is_leaf()) {
        j["leaf"] = n.histogram;
        return j;
    }
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["histogram"] = n.histogram;
    j["left"] = node_to_json(tree, n.left);
    j["right"] = node_to_json(tree, n.right);
    return j;
}

int node_from_json(DecisionTree& tree, const nlohmann::ordered_json& j, int n_classes, int n_features, int depth) {
    if (depth > 4096) throw DataError{"tree is too deep"};
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("leaf")) {
        tree.nodes[id].histogram = j.at("leaf").get<std::vector<double>>();
    } else {
        const int feature = j.at("feature").get<int>();
        if (feature < 0 || feature >= n_features) throw DataError{"tree split feature out of range"};
        tree.nodes[id].feature = feature;
        tree.nodes[id].threshold = j.at("threshold").get<double>();
        tree.nodes[id].histogram = j.at("histogram").get<std::vector<double>>();
        const int l = node_from_json(tree, j.at("left"), n_classes, n_features, depth + 1);
        const int r = node_from_json(tree, j.at("right"), n_classes, n_features, depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
    }
    if (static_cast<int>(tree.nodes[id].histogram.size()) != n_classes) throw DataError{"tree histogram size mismatch"};
    return id;
}

}  // namespace

double gini(std::span<const double> counts) {
    const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (n <= 0.0) return 0.0;
    double sq = 0.0;
    for (double c : counts) sq += (c / n) * (c / n);
    return 1.0 - sq;
}

std::optional<SplitChoice> best_split(const FeatureMatrix& x, std::span<const int> y, int n_classes,
                                      std::span<const std::size_t> rows, std::span<const int> features) {
    const auto n = static_cast<double>(rows.size());
    std::vector<double> total(static_cast<std::size_t>(n_classes), 0.0);
    for (auto r : rows) total[y[r]] += 1.0;
    const double parent = gini(total);

    std::optional<SplitChoice> best;
    std::vector<std::pair<double, int>> sorted(rows.size());
    std::vector<double> left(total.size()), right(total.size());
    for (int f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {x(static_cast<Eigen::Index>(rows[i]), f), y[rows[i]]};
        std::sort(sorted.begin(), sorted.end());
        std::fill(left.begin(), left.end(), 0.0);
        right = total;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            left[sorted[i].second] += 1.0;
            right[sorted[i].second] -= 1.0;
            if (sorted[i].first == sorted[i + 1].first) continue;
            const auto nl = static_cast<double>(i + 1);
            const double decrease = parent - (nl * gini(left) + (n - nl) * gini(right)) / n;
            if (!best || decrease > best->decrease) {
                best = SplitChoice{f, sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0, decrease};
            }
        }
    }
    return best;
}

int DecisionTree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes[i].is_leaf()) {
            d[nodes[i].left] = d[i] + 1;
            d[nodes[i].right] = d[i] + 1;
        }
    }
    return deepest;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
    const TreeNode* n = &nodes.at(0);
    while (!n->is_leaf()) n = &nodes[row[n->feature] <= n->threshold ? n->left : n->right];
    return *n;
}

int DecisionTree::predict(std::span<const double> row) const {
    return argmax_lowest(leaf_for(row).histogram);
}

std::vector<int> ForestModel::votes(std::span<const double> row) const {
    if (static_cast<int>(row.size()) != n_features) throw ShapeMismatch{"forest input has the wrong width"};
    std::vector<int> v(static_cast<std::size_t>(n_classes), 0);
    for (const auto& t : trees) ++v[t.predict(row)];
    return v;
}

int ForestModel::predict(std::span<const double> row) const {
    const auto v = votes(row);
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

nlohmann::ordered_json ForestModel::to_json() const {
    nlohmann::ordered_json j;
    j["model"] = "random_forest";
    j["n_classes"] = n_classes;
    j["n_features"] = n_features;
    j["n_estimators"] = config.n_estimators;
    j["max_depth"] = config.max_depth;
    j["max_features"] = config.max_features;
    j["bootstrap"] = config.bootstrap;
    j["seed"] = config.seed;
    nlohmann::ordered_json ts = nlohmann::ordered_json::array();
    for (const auto& t : trees) ts.push_back(node_to_json(t, 0));
    j["trees"] = std::move(ts);
    return j;
}

ForestModel ForestModel::from_json(const nlohmann::ordered_json& j) {
    ForestModel m;
    m.n_classes = j.at("n_classes").get<int>();
    m.n_features = j.at("n_features").get<int>();
    if (m.n_classes < 1 || m.n_features < 0) throw DataError{"bad forest dimensions"};
    m.config.n_estimators = j.at("n_estimators").get<int>();
    m.config.max_depth = j.at("max_depth").get<int>();
    m.config.max_features = j.at("max_features").get<int>();
    m.config.bootstrap = j.at("bootstrap").get<bool>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) {
        DecisionTree tree;
        node_from_json(tree, t, m.n_classes, m.n_features, 0);
        m.trees.push_back(std::move(tree));
    }
    if (m.trees.empty()) throw DataError{"forest has no trees"};
    return m;
}

ForestModel forest_train(const FeatureMatrix& x, std::span<const int> y, int n_classes, const ForestConfig& cfg) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeMismatch{"feature rows and labels differ in count"};
    if (y.empty()) throw EmptyTraining{"no training samples for the forest"};
    if (cfg.n_estimators < 1 || cfg.max_depth < 0 || cfg.max_features < 0) throw BadConfig{"bad forest settings"};
    for (int label : y) {
        if (label < 0 || label >= n_classes) throw std::out_of_range{"forest label out of range"};
    }
    const int d = static_cast<int>(x.cols());
    const int max_features = std::clamp(
        cfg.max_features > 0 ? cfg.max_features : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))), 1,
        std::max(d, 1));

    ForestModel model{n_classes, d, cfg, std::vector<DecisionTree>(static_cast<std::size_t>(cfg.n_estimators))};
    auto build_tree = [&](int k) {
        Rng rng = make_rng(cfg.seed, fmt::format("forest/tree/{}", k));
        std::vector<std::size_t> rows(y.size());
        if (cfg.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick{0, y.size() - 1};
            for (auto& r : rows) r = pick(rng);
            std::sort(rows.begin(), rows.end());
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        model.trees[k] = TreeBuilder{x, y, n_classes, cfg.max_depth, max_features, std::move(rng)}.build(std::move(rows));
    };

    const int threads = std::clamp(cfg.threads, 1, cfg.n_estimators);
    if (threads == 1) {
        for (int k = 0; k < cfg.n_estimators; ++k) build_tree(k);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (int k = t; k < cfg.n_estimators; k += threads) build_tree(k);
            });
        }
    }
    return model;
}

}  // namespace trafprof
