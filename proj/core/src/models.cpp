#include "trafprof/models.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "trafprof/error.hpp"
#include "trafprof/rng.hpp"

namespace trafprof {

using nn::Matrix;
using nn::Vector;

namespace {

/// kPooledDim x (order.size() * B) with column t * B + b = pooled[b][order[t]].
void gather_pooled(std::span<const PooledSeries* const> batch, const std::vector<int>& order, Matrix& x) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    for (std::size_t t = 0; t < order.size(); ++t) {
        for (Eigen::Index b = 0; b < n; ++b) {
            const auto& e = batch[b]->entries[order[t]];
            for (int d = 0; d < kPooledDim; ++d) x(d, static_cast<Eigen::Index>(t) * n + b) = e[d];
        }
    }
}

std::vector<int> reversed_order() {
    std::vector<int> order(kPooledLength);
    for (int i = 0; i < static_cast<int>(kPooledLength); ++i) order[i] = static_cast<int>(kPooledLength) - 1 - i;
    return order;
}

struct AppTape {
    std::vector<nn::LstmTape> cells;
    Matrix concat;
    Matrix logits;
    Matrix last_cell;
};

void run_app(const AppClassifier& model, std::span<const PooledSeries* const> batch, AppTape& tape, bool record) {
    const int h = model.hidden();
    const auto n = static_cast<int>(batch.size());
    Matrix c = Matrix::Zero(h, n);
    tape.cells.resize(model.cells.size());
    tape.concat.resize(h * static_cast<int>(model.cells.size()), n);
    Matrix x;
    for (std::size_t k = 0; k < model.cells.size(); ++k) {
        const auto& order = model.assignment.cell_order[k];
        x.resize(kPooledDim, static_cast<Eigen::Index>(order.size()) * n);
        gather_pooled(batch, order, x);
        auto r = nn::lstm_forward_batch(model.cells[k], x, n, c, record ? &tape.cells[k] : nullptr);
        tape.concat.middleRows(static_cast<Eigen::Index>(k) * h, h) = r.theta_last;
        c = std::move(r.c_last);
    }
    tape.logits = model.head.forward(tape.concat);
    tape.last_cell = std::move(c);
}

Matrix activity_inputs(const ActivityClassifier& model, std::span<const PooledSeries* const> batch,
                       const Matrix& context) {
    static const std::vector<int> order = reversed_order();
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto ctx_rows = context.rows();
    if (ctx_rows != model.app_classes + model.app_hidden || context.cols() != n) {
        throw ShapeMismatch{"activity context has the wrong shape"};
    }
    Matrix x(kPooledDim + ctx_rows, static_cast<Eigen::Index>(order.size()) * n);
    Matrix pooled(kPooledDim, x.cols());
    gather_pooled(batch, order, pooled);
    x.topRows(kPooledDim) = pooled;
    for (std::size_t t = 0; t < order.size(); ++t) x.bottomRows(ctx_rows).middleCols(static_cast<Eigen::Index>(t) * n, n) = context;
    return x;
}

void require_finite(const nn::LstmParams& p) {
    bool ok = true;
    p.visit([&](std::string_view, const Matrix& t) { ok = ok && t.allFinite(); });
    if (!ok) throw DataError{"model tensors contain non-finite values"};
}

}  // namespace

BlockAssignment BlockAssignment::reversed_pairs() {
    BlockAssignment a;
    for (int cell = 0; cell < kAppCells; ++cell) {
        std::vector<int> order;
        const int hi = static_cast<int>(kPooledLength) - 1 - cell * 2 * static_cast<int>(kPoolBlockSize);
        for (int i = hi; i > hi - 2 * static_cast<int>(kPoolBlockSize); --i) order.push_back(i);
        a.cell_order.push_back(std::move(order));
    }
    return a;
}

AppClassifier AppClassifier::zeros(std::vector<std::string> classes, int hidden, BlockAssignment assignment) {
    AppClassifier m;
    m.head = nn::DenseParams::zeros(static_cast<int>(classes.size()), hidden * static_cast<int>(assignment.cell_order.size()));
    m.classes = std::move(classes);
    for (std::size_t k = 0; k < assignment.cell_order.size(); ++k) m.cells.push_back(nn::LstmParams::zeros(hidden, kPooledDim));
    m.assignment = std::move(assignment);
    return m;
}

AppClassifier AppClassifier::initialized(std::vector<std::string> classes, int hidden, Rng& rng,
                                         BlockAssignment assignment) {
    AppClassifier m;
    const auto n_cells = static_cast<int>(assignment.cell_order.size());
    for (int k = 0; k < n_cells; ++k) m.cells.push_back(nn::LstmParams::initialized(hidden, kPooledDim, 1, rng));
    m.head = nn::DenseParams::initialized(static_cast<int>(classes.size()), hidden * n_cells, rng);
    m.classes = std::move(classes);
    m.assignment = std::move(assignment);
    return m;
}

void AppClassifier::visit(const nn::TensorVisitor& f) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
        cells[k].visit([&](std::string_view name, Matrix& t) { f(fmt::format("cell{}.{}", k + 1, name), t); });
    }
    head.visit([&](std::string_view name, Matrix& t) { f(fmt::format("head.{}", name), t); });
}

nlohmann::ordered_json AppClassifier::to_json() const {
    nlohmann::ordered_json j;
    j["model"] = "app_classifier";
    j["classes"] = classes;
    j["hidden"] = hidden();
    j["input"] = kPooledDim;
    j["block_assignment"] = assignment.cell_order;
    nlohmann::ordered_json cells_json = nlohmann::ordered_json::array();
    for (const auto& c : cells) cells_json.push_back(c.to_json());
    j["cells"] = std::move(cells_json);
    j["head"] = head.to_json();
    return j;
}

AppClassifier AppClassifier::from_json(const nlohmann::ordered_json& j) {
    AppClassifier m;
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.assignment.cell_order = j.at("block_assignment").get<std::vector<std::vector<int>>>();
    for (const auto& c : j.at("cells")) m.cells.push_back(nn::LstmParams::from_json(c));
    m.head = nn::DenseParams::from_json(j.at("head"));
    if (m.cells.size() != m.assignment.cell_order.size() || m.cells.empty()) {
        throw DataError{"app classifier needs one block list per cell"};
    }
    for (const auto& order : m.assignment.cell_order) {
        for (int i : order) {
            if (i < 0 || i >= static_cast<int>(kPooledLength)) throw DataError{"block assignment index out of range"};
        }
    }
    if (m.head.outputs() != m.class_count() || m.head.inputs() != m.hidden() * static_cast<int>(m.cells.size())) {
        throw DataError{"app classifier head has the wrong shape"};
    }
    for (const auto& c : m.cells) require_finite(c);
    return m;
}

AppOutput app_forward(const AppClassifier& model, const PooledSeries& pooled) {
    const PooledSeries* one[] = {&pooled};
    const int h = model.hidden();
    AppOutput out;
    Matrix c = Matrix::Zero(h, 1);
    Matrix concat(h * static_cast<int>(model.cells.size()), 1);
    for (std::size_t k = 0; k < model.cells.size(); ++k) {
        const auto& order = model.assignment.cell_order[k];
        Matrix x(kPooledDim, static_cast<Eigen::Index>(order.size()));
        gather_pooled(one, order, x);
        auto r = nn::lstm_forward_batch(model.cells[k], x, 1, c);
        concat.middleRows(static_cast<Eigen::Index>(k) * h, h) = r.theta_last;
        out.final_thetas.emplace_back(r.theta_last.col(0));
        out.cell_states.emplace_back(r.c_last.col(0));
        c = std::move(r.c_last);
    }
    out.softmax = nn::softmax(model.head.forward(concat).col(0));
    return out;
}

AppBatchOutput app_forward_batch(const AppClassifier& model, std::span<const PooledSeries* const> batch) {
    AppTape tape;
    run_app(model, batch, tape, false);
    return {nn::softmax_columns(tape.logits), std::move(tape.last_cell)};
}

double app_loss_and_grads(const AppClassifier& model, std::span<const PooledSeries* const> batch,
                          std::span<const int> labels, AppClassifier* grads) {
    AppTape tape;
    run_app(model, batch, tape, grads != nullptr);
    const auto xent = nn::softmax_xent_batch(tape.logits, labels);
    if (!grads) return xent.loss;

    const int h = model.hidden();
    const Matrix dconcat = model.head.backward(tape.concat, xent.dlogits, grads->head);
    Matrix dc = Matrix::Zero(h, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t k = model.cells.size(); k-- > 0;) {
        dc = nn::lstm_backward_batch(model.cells[k], tape.cells[k], dconcat.middleRows(static_cast<Eigen::Index>(k) * h, h),
                                     dc, grads->cells[k]);
    }
    return xent.loss;
}

ActivityClassifier ActivityClassifier::zeros(std::string app, std::vector<std::string> classes, int app_classes,
                                             int app_hidden, int hidden, int gate_depth) {
    ActivityClassifier m;
    m.app = std::move(app);
    m.cell = nn::LstmParams::zeros(hidden, input_size(app_classes, app_hidden), gate_depth);
    m.head = nn::DenseParams::zeros(static_cast<int>(classes.size()), hidden);
    m.classes = std::move(classes);
    m.app_classes = app_classes;
    m.app_hidden = app_hidden;
    return m;
}

ActivityClassifier ActivityClassifier::initialized(std::string app, std::vector<std::string> classes, int app_classes,
                                                   int app_hidden, int hidden, int gate_depth, Rng& rng) {
    ActivityClassifier m;
    m.app = std::move(app);
    m.cell = nn::LstmParams::initialized(hidden, input_size(app_classes, app_hidden), gate_depth, rng);
    m.head = nn::DenseParams::initialized(static_cast<int>(classes.size()), hidden, rng);
    m.classes = std::move(classes);
    m.app_classes = app_classes;
    m.app_hidden = app_hidden;
    return m;
}

void ActivityClassifier::visit(const nn::TensorVisitor& f) {
    cell.visit([&](std::string_view name, Matrix& t) { f(fmt::format("cell.{}", name), t); });
    head.visit([&](std::string_view name, Matrix& t) { f(fmt::format("head.{}", name), t); });
}

nlohmann::ordered_json ActivityClassifier::to_json() const {
    nlohmann::ordered_json j;
    j["model"] = "activity_classifier";
    j["app"] = app;
    j["classes"] = classes;
    j["app_classes"] = app_classes;
    j["app_hidden"] = app_hidden;
    j["cell"] = cell.to_json();
    j["head"] = head.to_json();
    return j;
}

ActivityClassifier ActivityClassifier::from_json(const nlohmann::ordered_json& j) {
    ActivityClassifier m;
    m.app = j.at("app").get<std::string>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.app_classes = j.at("app_classes").get<int>();
    m.app_hidden = j.at("app_hidden").get<int>();
    m.cell = nn::LstmParams::from_json(j.at("cell"));
    m.head = nn::DenseParams::from_json(j.at("head"));
    if (m.cell.input() != input_size(m.app_classes, m.app_hidden) ||
        m.head.outputs() != static_cast<int>(m.classes.size()) || m.head.inputs() != m.cell.hidden()) {
        throw DataError{"activity classifier tensors have inconsistent shapes"};
    }
    require_finite(m.cell);
    return m;
}

double activity_loss_and_grads(const ActivityClassifier& model, std::span<const PooledSeries* const> batch,
                               const Matrix& context, std::span<const int> labels, ActivityClassifier* grads) {
    const auto n = static_cast<int>(batch.size());
    const Matrix x = activity_inputs(model, batch, context);
    nn::LstmTape tape;
    const auto r = nn::lstm_forward_batch(model.cell, x, n, Matrix::Zero(model.cell.hidden(), n), grads ? &tape : nullptr);
    const auto xent = nn::softmax_xent_batch(model.head.forward(r.theta_last), labels);
    if (grads) {
        const Matrix dtheta = model.head.backward(r.theta_last, xent.dlogits, grads->head);
        nn::lstm_backward_batch(model.cell, tape, dtheta, Matrix::Zero(model.cell.hidden(), n), grads->cell);
    }
    return xent.loss;
}

Vector activity_forward(const ActivityClassifier& model, const PooledSeries& pooled, const Vector& app_softmax,
                        const Vector& app_cell) {
    if (app_softmax.size() != model.app_classes || app_cell.size() != model.app_hidden) {
        throw ShapeMismatch{"activity classifier context has the wrong size"};
    }
    const PooledSeries* one[] = {&pooled};
    Matrix context(model.app_classes + model.app_hidden, 1);
    context << app_softmax, app_cell;
    const Matrix x = activity_inputs(model, one, context);
    const auto r = nn::lstm_forward_batch(model.cell, x, 1, Matrix::Zero(model.cell.hidden(), 1));
    return nn::softmax(model.head.forward(r.theta_last).col(0));
}

std::optional<int> route(const Vector& softmax, double tau) {
    if (softmax.size() == 0) return std::nullopt;
    Eigen::Index best = 0;
    softmax.maxCoeff(&best);
    if (softmax(best) >= tau) return static_cast<int>(best);
    return std::nullopt;
}

LstmEnsemble LstmEnsemble::initialized(const Taxonomy& taxonomy, int hidden, int gate_depth, std::uint64_t seed) {
    LstmEnsemble e;
    e.taxonomy = taxonomy;
    Rng app_rng = make_rng(seed, "init/app");
    e.app = AppClassifier::initialized(taxonomy.app_names(), hidden, app_rng);
    for (std::size_t a = 0; a < taxonomy.app_count(); ++a) {
        if (!taxonomy.has_activity_model(static_cast<int>(a))) continue;
        const auto& app = taxonomy.app(a);
        Rng rng = make_rng(seed, "init/activity/" + app.name);
        e.activity.emplace(app.name,
                           ActivityClassifier::initialized(app.name, app.activities, static_cast<int>(taxonomy.app_count()),
                                                           hidden, hidden, gate_depth, rng));
    }
    return e;
}

nlohmann::ordered_json LstmEnsemble::to_json() const {
    nlohmann::ordered_json j;
    j["taxonomy"] = taxonomy.to_json();
    j["app"] = app.to_json();
    nlohmann::ordered_json acts = nlohmann::ordered_json::object();
    for (const auto& [name, m] : activity) acts[name] = m.to_json();
    j["activity"] = std::move(acts);
    return j;
}

LstmEnsemble LstmEnsemble::from_json(const nlohmann::ordered_json& j) {
    LstmEnsemble e;
    e.taxonomy = Taxonomy::from_json(nlohmann::json::parse(j.at("taxonomy").dump()));
    e.app = AppClassifier::from_json(j.at("app"));
    if (e.app.classes != e.taxonomy.app_names()) throw DataError{"app classifier classes do not match the taxonomy"};
    for (const auto& [name, m] : j.at("activity").items()) {
        auto model = ActivityClassifier::from_json(m);
        const auto idx = e.taxonomy.app_index(name);
        if (!idx || model.classes != e.taxonomy.app(*idx).activities || model.app_classes != e.app.class_count() ||
            model.app_hidden != e.app.hidden()) {
            throw DataError{"activity classifier " + name + " does not fit the app classifier"};
        }
        e.activity.emplace(name, std::move(model));
    }
    return e;
}

Prediction predict(const LstmEnsemble& models, const PooledSeries& pooled, double tau) {
    const auto app = app_forward(models.app, pooled);
    Prediction p;
    p.app_probs = app.softmax;
    Eigen::Index best = 0;
    app.softmax.maxCoeff(&best);
    p.app = static_cast<int>(best);
    if (const auto routed = route(app.softmax, tau)) {
        p.routed = true;
        const auto& name = models.taxonomy.app(*routed).name;
        if (auto it = models.activity.find(name); it != models.activity.end()) {
            p.activity_probs = activity_forward(it->second, pooled, app.softmax, app.cell_states.back());
            Eigen::Index act = 0;
            p.activity_probs.maxCoeff(&act);
            p.activity = static_cast<int>(act);
        }
    }
    return p;
}

StreamPrediction predict_for_eval(const LstmEnsemble& models, const LabeledSample& sample, double tau) {
    const auto app = app_forward(models.app, sample.pooled);
    StreamPrediction out;
    Eigen::Index best = 0;
    app.softmax.maxCoeff(&best);
    out.app = static_cast<int>(best);
    auto argmax_activity = [&](const std::string& name) -> std::optional<int> {
        auto it = models.activity.find(name);
        if (it == models.activity.end()) return std::nullopt;
        const Vector probs = activity_forward(it->second, sample.pooled, app.softmax, app.cell_states.back());
        Eigen::Index act = 0;
        probs.maxCoeff(&act);
        return static_cast<int>(act);
    };
    out.activity = argmax_activity(models.taxonomy.app(sample.app).name);
    if (const auto routed = route(app.softmax, tau)) out.routed_activity = argmax_activity(models.taxonomy.app(*routed).name);
    return out;
}

namespace {

std::vector<Matrix*> tensor_list(auto& model) {
    std::vector<Matrix*> out;
    model.visit([&](std::string_view, Matrix& t) { out.push_back(&t); });
    return out;
}

void zero_all(const std::vector<Matrix*>& tensors) {
    for (Matrix* t : tensors) t->setZero();
}

/// Uniform over classes, then uniform within the class, with replacement.
std::vector<std::size_t> draw_class_uniform(const std::vector<std::vector<std::size_t>>& by_class, int n, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick_class{0, by_class.size() - 1};
    std::vector<std::size_t> out(static_cast<std::size_t>(n));
    for (auto& idx : out) {
        const auto& members = by_class[pick_class(rng)];
        std::uniform_int_distribution<std::size_t> pick{0, members.size() - 1};
        idx = members[pick(rng)];
    }
    return out;
}

struct ActivityTrainer {
    int app = 0;
    ActivityClassifier* model = nullptr;
    std::vector<std::vector<std::size_t>> by_activity;
    Rng rng;
    nn::Adam optimizer;
    ActivityClassifier grads;
    std::vector<Matrix*> params;
    std::vector<Matrix*> grad_tensors;
};

}  // namespace

TrainHistory train(LstmEnsemble& models, const std::vector<LabeledSample>& samples, const TrainConfig& cfg) {
    const auto& tax = models.taxonomy;
    if (cfg.batch_size < 1 || cfg.n_batches < 0) throw BadConfig{"batch size must be positive"};
    std::vector<std::vector<std::size_t>> by_app(tax.app_count());
    for (std::size_t i = 0; i < samples.size(); ++i) by_app.at(samples[i].app).push_back(i);
    for (std::size_t a = 0; a < tax.app_count(); ++a) {
        if (by_app[a].empty()) throw EmptyClass{"no training samples for app " + tax.app(a).name};
    }

    std::vector<ActivityTrainer> trainers;
    for (std::size_t a = 0; a < tax.app_count(); ++a) {
        const auto& app = tax.app(a);
        auto it = models.activity.find(app.name);
        if (it == models.activity.end()) continue;
        ActivityTrainer t{static_cast<int>(a), &it->second, std::vector<std::vector<std::size_t>>(app.activities.size()),
                          make_rng(cfg.seed, "train/activity/" + app.name), nn::Adam{cfg.adam}, it->second, {}, {}};
        for (auto i : by_app[a]) t.by_activity.at(samples[i].activity).push_back(i);
        for (std::size_t k = 0; k < t.by_activity.size(); ++k) {
            if (t.by_activity[k].empty()) {
                throw EmptyClass{fmt::format("no training samples for {}/{}", app.name, app.activities[k])};
            }
        }
        trainers.push_back(std::move(t));
    }
    for (auto& t : trainers) {
        t.params = tensor_list(*t.model);
        t.grad_tensors = tensor_list(t.grads);
    }

    Rng app_rng = make_rng(cfg.seed, "train/app");
    nn::Adam app_opt{cfg.adam};
    AppClassifier app_grads = models.app;
    auto app_params = tensor_list(models.app);
    auto app_grad_tensors = tensor_list(app_grads);

    TrainHistory history;
    std::vector<const PooledSeries*> batch(static_cast<std::size_t>(cfg.batch_size));
    std::vector<int> labels(static_cast<std::size_t>(cfg.batch_size));
    for (int step = 0; step < cfg.n_batches; ++step) {
        // Activity models read the app model as it stood at the start of the batch.
        for (auto& t : trainers) {
            const auto idx = draw_class_uniform(t.by_activity, cfg.batch_size, t.rng);
            for (std::size_t b = 0; b < idx.size(); ++b) {
                batch[b] = &samples[idx[b]].pooled;
                labels[b] = samples[idx[b]].activity;
            }
            const auto app_out = app_forward_batch(models.app, batch);
            Matrix context(app_out.softmax.rows() + app_out.last_cell.rows(), cfg.batch_size);
            context << app_out.softmax, app_out.last_cell;
            zero_all(t.grad_tensors);
            const double loss = activity_loss_and_grads(*t.model, batch, context, labels, &t.grads);
            nn::clip_global_norm(t.grad_tensors, cfg.clip_norm);
            t.optimizer.step(t.params, t.grad_tensors);
            history.activity_loss[t.model->app].push_back(loss);
        }

        const auto idx = draw_class_uniform(by_app, cfg.batch_size, app_rng);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            batch[b] = &samples[idx[b]].pooled;
            labels[b] = samples[idx[b]].app;
        }
        zero_all(app_grad_tensors);
        const double loss = app_loss_and_grads(models.app, batch, labels, &app_grads);
        nn::clip_global_norm(app_grad_tensors, cfg.clip_norm);
        app_opt.step(app_params, app_grad_tensors);
        history.app_loss.push_back(loss);
    }
    return history;
}

}  // namespace trafprof
