#include "trafprof_cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "trafprof/error.hpp"
#include "trafprof/evaluation.hpp"
#include "trafprof/nn/sequence.hpp"
#include "trafprof/profiler.hpp"
#include "trafprof/rng.hpp"
#include "trafprof/synth.hpp"
#include "trafprof_cli/files.hpp"

namespace trafprof::cli {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kBundleFormat = "trafprof-bundle/1";
constexpr const char* kDatasetFormat = "trafprof-dataset/1";
constexpr const char* kTraitFormat = "trafprof-traits/1";

std::string join_lines(const std::vector<std::string>& lines) {
    std::string text;
    for (const auto& l : lines) {
        text += l;
        text.push_back('\n');
    }
    return text;
}

nlohmann::json parse_json_file(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError{fmt::format("{}: {}", path.string(), e.what())};
    }
}

ojson parse_ojson_file(const fs::path& path) {
    try {
        return ojson::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError{fmt::format("{}: {}", path.string(), e.what())};
    }
}

std::vector<StreamRecord> load_streams(const fs::path& path) {
    std::vector<StreamRecord> records;
    std::size_t n = 0;
    for (const auto& line : read_lines(path)) {
        ++n;
        try {
            records.push_back(parse_stream_line(line));
        } catch (const DataError& e) {
            throw DataError{fmt::format("{}:{}: {}", path.string(), n, e.what())};
        }
    }
    return records;
}

std::vector<ProfileEvent> load_events(const fs::path& path) {
    std::ifstream in{path};
    if (!in) throw DataError{fmt::format("cannot read {}", path.string())};
    return read_event_log(in);
}

PopulationProfile load_population(const RunConfig& cfg) {
    PopulationProfile pop = cfg.population.empty() ? default_population()
                                                   : population_from_json(parse_json_file(cfg.population));
    if (cfg.users > 0) pop.users = cfg.users;
    pop.validate();
    return pop;
}

void require_path(const fs::path& p, const char* what) {
    if (p.empty()) throw BadConfig{fmt::format("{} is required", what)};
}

nlohmann::json optional_name(const std::optional<int>& index, const std::vector<std::string>& names) {
    if (!index || *index < 0 || static_cast<std::size_t>(*index) >= names.size()) return nullptr;
    return names[static_cast<std::size_t>(*index)];
}

}  // namespace

void cmd_synth(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    require_path(out_dir, "--out (or paths.data)");
    const SynthConfig sc = synth_config_from_kv(cfg.kv);
    const auto population = load_population(cfg);
    const auto dataset = gen_dataset(sc);
    const auto corpus = gen_users(population, cfg.events_per_user, sc.seed);

    StagedDirectory dir{out_dir};
    for (const auto& f : dataset.pcaps) dir.write("pcaps/" + f.name, f.bytes);
    std::vector<std::string> lines;
    for (const auto& l : dataset.labels) lines.push_back(label_to_json_line(l));
    dir.write("labels.jsonl", join_lines(lines));
    const auto conf = synth_config_to_kv(sc).to_text();
    dir.write("synth.conf", conf);

    lines.clear();
    for (const auto& e : corpus.events) lines.push_back(event_to_json_line(e));
    dir.write("users/events.jsonl", join_lines(lines));
    dir.write("users/truth.json", json_text(trait_truth_to_json(corpus.truth)));
    dir.write("users/traits.json", json_text(trait_config_to_json(population.traits)));
    dir.write("users/population.json", json_text(population_to_json(population)));

    ojson manifest;
    manifest["format"] = kDatasetFormat;
    manifest["seed"] = sc.seed;
    manifest["scale"] = sc.scale;
    manifest["config_sha256"] = sha256_hex(conf);
    manifest["class_counts"] = dataset.class_counts;
    manifest["streams"] = dataset.labels.size();
    manifest["users"] = population.users;
    manifest["events_per_user"] = cfg.events_per_user;
    manifest["files"] = hashes_to_json(dir.files());
    dir.write("manifest.json", json_text(manifest));
    dir.commit();

    log << fmt::format("synth: {} streams in {} pcaps, {} users x {} events -> {}\n", dataset.labels.size(),
                       dataset.pcaps.size(), population.users, cfg.events_per_user, out_dir.string());
}

void cmd_ingest(const RunConfig& cfg, const IngestOptions& opts, std::ostream& log) {
    require_path(opts.out, "--out");
    if (opts.inputs.empty()) throw BadConfig{"ingest needs at least one pcap or directory"};
    const auto device = Ipv4::parse(cfg.device_ip);
    if (!device) throw BadConfig{fmt::format("device ip '{}' is not an IPv4 address", cfg.device_ip)};

    std::vector<fs::path> pcaps;
    std::optional<fs::path> labels = opts.labels;
    for (const auto& in : opts.inputs) {
        if (!fs::is_directory(in)) {
            if (!fs::exists(in)) throw DataError{fmt::format("{} does not exist", in.string())};
            pcaps.push_back(in);
            continue;
        }
        fs::path dir = in;
        if (fs::is_directory(in / "pcaps")) {
            dir = in / "pcaps";
            if (!labels && fs::exists(in / "labels.jsonl")) labels = in / "labels.jsonl";
        }
        std::vector<fs::path> found;
        for (const auto& entry : fs::directory_iterator{dir}) {
            if (entry.is_regular_file() && entry.path().extension() == ".pcap") found.push_back(entry.path());
        }
        std::sort(found.begin(), found.end());
        pcaps.insert(pcaps.end(), found.begin(), found.end());
    }

    std::set<std::string> names;
    std::vector<StreamRecord> records;
    IngestReport report;
    for (const auto& path : pcaps) {
        const auto name = path.filename().string();
        if (!names.insert(name).second) throw DataError{fmt::format("two inputs are named {}", name)};
        PcapContents contents;
        try {
            contents = read_pcap(read_bytes(path));
        } catch (const DataError& e) {
            throw DataError{fmt::format("{}: {}", path.string(), e.what())};
        }
        for (const auto& s : ingest_capture(contents, *device, report)) records.push_back(summarize(s, name));
    }

    LabelMatch match;
    if (labels) {
        std::vector<LabelEntry> entries;
        for (const auto& line : read_lines(*labels)) entries.push_back(parse_label_line(line));
        match = attach_labels(records, entries);
    }

    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(to_json_line(r));

    ojson rep;
    rep["files"] = pcaps.size();
    rep["packets"] = report.packets;
    rep["skipped"] = {{"vlan", report.skipped.vlan},
                      {"ipv6", report.skipped.ipv6},
                      {"non_ipv4", report.skipped.non_ipv4},
                      {"non_tcp_udp", report.skipped.non_tcp_udp},
                      {"fragments", report.skipped.fragments},
                      {"malformed", report.skipped.malformed}};
    rep["streams"] = report.streams;
    rep["foreign_streams"] = report.foreign_streams;
    rep["dns_streams"] = report.dns_streams;
    rep["labeled_by_sni"] = report.labeled_by_sni;
    rep["labeled_by_dns"] = report.labeled_by_dns;
    rep["unlabeled"] = report.unlabeled;
    rep["malformed_dns"] = report.malformed_dns;
    if (labels) {
        rep["labels"] = {{"matched", match.matched},
                         {"records_without_label", match.records_without_label},
                         {"labels_without_record", match.labels_without_record}};
    }

    write_file_atomic(opts.out, join_lines(lines));
    if (opts.report) write_file_atomic(*opts.report, json_text(rep));
    log << fmt::format("ingest: {} packets, {} streams ({} by SNI, {} by DNS, {} unlabeled), {} skipped frames -> {}\n",
                       report.packets, report.streams, report.labeled_by_sni, report.labeled_by_dns, report.unlabeled,
                       report.skipped.total(), opts.out.string());
    if (labels) {
        log << fmt::format("ingest: {} streams labeled, {} without label, {} labels unmatched\n", match.matched,
                           match.records_without_label, match.labels_without_record);
    }
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::lstm: return "lstm";
        case ModelKind::forest: return "forest";
        case ModelKind::svm: return "svm";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& text) {
    if (text == "lstm") return ModelKind::lstm;
    if (text == "forest") return ModelKind::forest;
    if (text == "svm") return ModelKind::svm;
    throw BadConfig{fmt::format("unknown model kind '{}'", text)};
}

void cmd_train(const RunConfig& cfg, const TrainOptions& opts, std::ostream& log) {
    require_path(opts.streams, "--streams");
    require_path(opts.out, "--out (or paths.model)");
    const auto streams_sha = sha256_hex(read_bytes(opts.streams));
    const auto records = load_streams(opts.streams);
    const Taxonomy taxonomy = Taxonomy::standard();
    const auto built = build_dataset(records, taxonomy, cfg.prep);
    if (built.samples.empty()) throw EmptyTraining{fmt::format("{} has no labeled streams", opts.streams.string())};

    const std::uint64_t split_seed = substream_seed(cfg.seed, "split");
    const auto split = stratified_split(built.samples, cfg.test_fraction, split_seed);
    std::vector<LabeledSample> train_set;
    train_set.reserve(split.train.size());
    for (auto i : split.train) train_set.push_back(built.samples[i]);

    ojson meta;
    meta["format"] = kBundleFormat;
    meta["model"] = to_string(opts.model);
    meta["seed"] = cfg.seed;
    meta["taxonomy"] = taxonomy.to_json();
    meta["preprocess"] = {{"size_cap", cfg.prep.size_cap}, {"delay_cap", cfg.prep.delay_cap}};
    meta["tau"] = cfg.tau;
    meta["streams_sha256"] = streams_sha;
    meta["dataset"] = {{"samples", built.samples.size()},
                       {"unlabeled", built.unlabeled},
                       {"unknown_label", built.unknown_label}};
    meta["split"] = {{"test_fraction", cfg.test_fraction},
                     {"seed", split_seed},
                     {"train", split.train.size()},
                     {"test", split.test.size()}};

    ojson models;
    std::optional<ojson> history;
    if (opts.model == ModelKind::lstm) {
        auto ensemble = LstmEnsemble::initialized(taxonomy, cfg.hidden, cfg.gate_depth, cfg.seed);
        const auto tc = cfg.train_config();
        const auto h = trafprof::train(ensemble, train_set, tc);
        meta["hyperparameters"] = {{"hidden", cfg.hidden},       {"gate_depth", cfg.gate_depth},
                                   {"batches", tc.n_batches},    {"batch_size", tc.batch_size},
                                   {"lr", tc.adam.lr},           {"clip_norm", tc.clip_norm}};
        history = ojson{{"app_loss", h.app_loss}, {"activity_loss", h.activity_loss}};
        models = ensemble.to_json();
        if (!h.app_loss.empty()) {
            log << fmt::format("train: app loss {:.4f} -> {:.4f} over {} batches\n", h.app_loss.front(),
                               h.app_loss.back(), h.app_loss.size());
        }
    } else {
        BaselineConfig bc = cfg.baseline;
        bc.kind = opts.model == ModelKind::forest ? BaselineKind::forest : BaselineKind::svm;
        bc.seed = cfg.seed;
        const auto ensemble = baseline_train(taxonomy, train_set, bc);
        if (bc.kind == BaselineKind::forest) {
            meta["hyperparameters"] = {{"app_estimators", bc.app_forest.n_estimators},
                                       {"app_depth", bc.app_forest.max_depth},
                                       {"activity_estimators", bc.activity_forest.n_estimators},
                                       {"activity_depth", bc.activity_forest.max_depth},
                                       {"max_features", bc.app_forest.max_features}};
        } else {
            meta["hyperparameters"] = {{"lambda", bc.svm.lambda}, {"epochs", bc.svm.epochs}};
        }
        models = ensemble.to_json();
    }

    StagedDirectory dir{opts.out};
    dir.write("meta.json", json_text(meta));
    dir.write("app.json", json_text(models.at("app")));
    for (const auto& [name, m] : models.at("activity").items()) dir.write("activity_" + name + ".json", json_text(m));
    if (history) dir.write("history.json", json_text(*history));
    dir.write("manifest.json", json_text(ojson{{"files", hashes_to_json(dir.files())}}));
    dir.commit();
    log << fmt::format("train: {} model on {} streams ({} held out) -> {}\n", to_string(opts.model), train_set.size(),
                       split.test.size(), opts.out.string());
}

StreamPrediction Bundle::predict(const LabeledSample& sample) const {
    if (const auto* lstm = std::get_if<LstmEnsemble>(&model)) return predict_for_eval(*lstm, sample, tau);
    return baseline_predict(std::get<BaselineEnsemble>(model), sample);
}

Bundle load_bundle(const fs::path& dir) {
    const auto manifest = parse_ojson_file(dir / "manifest.json");
    for (const auto& [name, entry] : manifest.at("files").items()) {
        const auto bytes = read_bytes(dir / name);
        if (sha256_hex(bytes) != entry.at("sha256").get<std::string>()) {
            throw DataError{fmt::format("{} does not match its manifest hash", (dir / name).string())};
        }
    }
    Bundle b;
    try {
        b.meta = parse_ojson_file(dir / "meta.json");
        if (b.meta.at("format") != kBundleFormat) throw DataError{"unsupported bundle format"};
        b.kind = parse_model_kind(b.meta.at("model").get<std::string>());
        b.taxonomy = Taxonomy::from_json(nlohmann::json::parse(b.meta.at("taxonomy").dump()));
        b.prep.size_cap = b.meta.at("preprocess").at("size_cap").get<double>();
        b.prep.delay_cap = b.meta.at("preprocess").at("delay_cap").get<double>();
        b.tau = b.meta.at("tau").get<double>();

        ojson j;
        j["taxonomy"] = b.meta.at("taxonomy");
        j["app"] = parse_ojson_file(dir / "app.json");
        j["activity"] = ojson::object();
        for (std::size_t a = 0; a < b.taxonomy.app_count(); ++a) {
            const auto path = dir / ("activity_" + b.taxonomy.app(a).name + ".json");
            if (fs::exists(path)) j["activity"][b.taxonomy.app(a).name] = parse_ojson_file(path);
        }
        if (b.kind == ModelKind::lstm) {
            b.model = LstmEnsemble::from_json(j);
        } else {
            b.model = BaselineEnsemble::from_json(j);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError{fmt::format("malformed bundle {}: {}", dir.string(), e.what())};
    }
    return b;
}

void cmd_eval(const EvalOptions& opts, std::ostream& log) {
    require_path(opts.bundle, "--bundle (or paths.model)");
    require_path(opts.streams, "--streams");
    require_path(opts.out, "--out (or paths.out)");
    const Bundle bundle = load_bundle(opts.bundle);
    const auto streams_sha = sha256_hex(read_bytes(opts.streams));
    const auto records = load_streams(opts.streams);
    const auto built = build_dataset(records, bundle.taxonomy, bundle.prep);

    std::vector<std::size_t> rows;
    if (opts.all) {
        rows.resize(built.samples.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    } else {
        if (bundle.meta.at("streams_sha256") != streams_sha) {
            throw BadConfig{"streams differ from the training input, so the held-out split is unknown; pass --all"};
        }
        const auto& split = bundle.meta.at("split");
        rows = stratified_split(built.samples, split.at("test_fraction").get<double>(),
                                split.at("seed").get<std::uint64_t>())
                   .test;
    }
    if (rows.empty()) throw EmptyTraining{"no labeled streams to evaluate"};

    std::vector<const LabeledSample*> samples;
    std::vector<StreamPrediction> predictions;
    std::vector<std::string> lines;
    const auto app_names = bundle.taxonomy.app_names();
    for (auto i : rows) {
        const auto& s = built.samples[i];
        const auto p = bundle.predict(s);
        samples.push_back(&s);
        predictions.push_back(p);
        const auto& true_acts = bundle.taxonomy.app(s.app).activities;
        const auto& routed_acts = bundle.taxonomy.app(p.app).activities;
        ojson line;
        line["key"] = s.key;
        line["app"] = app_names[s.app];
        line["predicted_app"] = app_names[p.app];
        line["activity"] = true_acts[s.activity];
        line["predicted_activity"] = optional_name(p.activity, true_acts);
        line["routed_activity"] = optional_name(p.routed_activity, routed_acts);
        lines.push_back(line.dump());
    }
    const auto report = evaluate_predictions(bundle.taxonomy, samples, predictions);

    ojson metrics;
    metrics["model"] = to_string(bundle.kind);
    metrics["split"] = opts.all ? "all" : "test";
    metrics["samples"] = rows.size();
    metrics["app_accuracy"] = report.app.accuracy();
    ojson act = ojson::object();
    for (const auto& [name, cm] : report.activity) act[name] = cm.accuracy();
    metrics["activity_accuracy"] = std::move(act);
    metrics["routed"] = {{"count", report.routed}, {"correct", report.routed_correct}};
    metrics["report"] = report.to_json();

    StagedDirectory dir{opts.out};
    dir.write("metrics.json", json_text(metrics));
    dir.write("confusion_app.csv", report.app.to_csv());
    for (const auto& [name, cm] : report.activity) dir.write("confusion_activity_" + name + ".csv", cm.to_csv());
    dir.write("predictions.jsonl", join_lines(lines));
    dir.write("manifest.json", json_text(ojson{{"files", hashes_to_json(dir.files())}}));
    dir.commit();

    log << fmt::format("eval: {} streams, app accuracy {:.4f}", rows.size(), report.app.accuracy());
    for (const auto& [name, cm] : report.activity) log << fmt::format(", {} {:.4f}", name, cm.accuracy());
    log << fmt::format(" -> {}\n", opts.out.string());
}

void cmd_profile_train(const RunConfig& cfg, const ProfileTrainOptions& opts, std::ostream& log) {
    require_path(opts.events, "--events");
    require_path(opts.truth, "--truth");
    require_path(opts.out, "--out");
    const auto traits_path = opts.traits ? *opts.traits : cfg.traits;
    require_path(traits_path, "--traits (or paths.traits)");
    const auto traits = trait_config_from_json(parse_json_file(traits_path));
    const auto truth = trait_truth_from_json(parse_json_file(opts.truth));
    const auto vocab = EventVocabulary::from_taxonomy(Taxonomy::standard());
    const auto db = replay(vocab, load_events(opts.events));

    std::vector<std::string> users;
    for (const auto& [u, _] : truth) users.push_back(u);
    const auto n_hold = static_cast<std::size_t>(std::llround(static_cast<double>(users.size()) * cfg.holdout));
    auto shuffled = users;
    auto rng = make_rng(cfg.seed, "profile/holdout");
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::set<std::string> held(shuffled.begin(), shuffled.begin() + static_cast<long>(n_hold));

    ojson out;
    out["format"] = kTraitFormat;
    out["alpha"] = cfg.alpha;
    out["vocabulary"] = vocab.keys();
    out["holdout_users"] = std::vector<std::string>(held.begin(), held.end());
    out["training_users"] = users.size() - held.size();
    ojson models = ojson::object();
    for (const auto& [trait, labels] : traits) {
        std::vector<LabeledProfile> profiles;
        for (const auto& u : users) {
            if (held.count(u)) continue;
            const auto& t = truth.at(u);
            auto it = t.find(trait);
            if (it == t.end()) continue;
            ProfileRecord rec = db.get(u).value_or(ProfileRecord{});
            rec.user_id = u;
            profiles.push_back({std::move(rec), it->second});
        }
        models[trait] = nb_train(trait, labels, profiles, vocab, cfg.alpha).to_json();
        log << fmt::format("profile: trait {} trained on {} users\n", trait, profiles.size());
    }
    out["traits"] = std::move(models);
    write_file_atomic(opts.out, json_text(out));
}

void cmd_profile_predict(const ProfilePredictOptions& opts, std::ostream& log) {
    require_path(opts.model, "--model");
    require_path(opts.out, "--out");
    const auto j = parse_json_file(opts.model);
    std::vector<TraitModel> models;
    EventVocabulary vocab;
    std::vector<std::string> holdout;
    try {
        if (j.at("format") != kTraitFormat) throw DataError{"unsupported trait model format"};
        vocab = EventVocabulary{j.at("vocabulary").get<std::vector<std::string>>()};
        holdout = j.at("holdout_users").get<std::vector<std::string>>();
        for (const auto& [name, m] : j.at("traits").items()) models.push_back(TraitModel::from_json(m));
    } catch (const nlohmann::json::exception& e) {
        throw DataError{fmt::format("malformed trait model {}: {}", opts.model.string(), e.what())};
    }
    const auto db = replay(vocab, opts.events ? load_events(*opts.events) : std::vector<ProfileEvent>{});

    std::set<std::string> users;
    if (opts.holdout_only) {
        users.insert(holdout.begin(), holdout.end());
    } else {
        for (const auto& [u, _] : db.snapshot()) users.insert(u);
    }
    users.insert(opts.users.begin(), opts.users.end());

    std::optional<TraitTruth> truth;
    if (opts.truth) truth = trait_truth_from_json(parse_json_file(*opts.truth));
    std::map<std::string, std::size_t> scored, correct;

    std::vector<std::string> lines;
    for (const auto& u : users) {
        ProfileRecord rec = db.get(u).value_or(ProfileRecord{});
        rec.user_id = u;
        ojson line;
        line["user"] = u;
        line["total_streams"] = rec.total_streams;
        ojson traits = ojson::object();
        for (const auto& m : models) {
            const auto post = nb_predict(m, rec);
            const auto best = static_cast<std::size_t>(std::max_element(post.begin(), post.end()) - post.begin());
            ojson p = ojson::object();
            for (std::size_t k = 0; k < post.size(); ++k) p[m.labels[k]] = post[k];
            traits[m.trait] = {{"label", m.labels[best]}, {"posterior", std::move(p)}};
            if (truth) {
                auto tu = truth->find(u);
                if (tu != truth->end()) {
                    auto tl = tu->second.find(m.trait);
                    if (tl != tu->second.end()) {
                        ++scored[m.trait];
                        if (tl->second == m.labels[best]) ++correct[m.trait];
                    }
                }
            }
        }
        line["traits"] = std::move(traits);
        lines.push_back(line.dump());
    }
    write_file_atomic(opts.out, join_lines(lines));
    log << fmt::format("profile: scored {} users -> {}\n", users.size(), opts.out.string());

    if (truth) {
        ojson report;
        report["users"] = users.size();
        ojson acc = ojson::object();
        for (const auto& m : models) {
            const auto n = scored[m.trait];
            const double a = n == 0 ? 0.0 : static_cast<double>(correct[m.trait]) / static_cast<double>(n);
            acc[m.trait] = {{"scored", n}, {"correct", correct[m.trait]}, {"accuracy", a}};
            log << fmt::format("profile: {} accuracy {:.4f} ({}/{})\n", m.trait, a, correct[m.trait], n);
        }
        report["traits"] = std::move(acc);
        if (opts.report) write_file_atomic(*opts.report, json_text(report));
    }
}

bool cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& opts, std::ostream& log) {
    if (opts.hidden < 1 || opts.input < 1 || opts.steps < 1 || opts.classes < 2 || opts.gate_depth < 1 ||
        opts.instances < 1 || !(opts.eps > 0.0) || !(opts.tolerance > 0.0)) {
        throw BadConfig{"gradcheck dimensions, eps and tolerance must be positive (classes >= 2)"};
    }
    auto rng = make_rng(cfg.seed, "gradcheck");
    nn::BackwardHooks hooks;
    hooks.drop_recurrent_path = opts.corrupt;

    bool all_passed = true;
    double worst = 0.0;
    ojson instances = ojson::array();
    for (int k = 0; k < opts.instances; ++k) {
        auto model = nn::SequenceClassifier::initialized(opts.hidden, opts.input, opts.classes, opts.gate_depth, rng);
        nn::Matrix seq(opts.input, opts.steps);
        nn::fill_uniform(seq, 1.0, rng);
        const int label = static_cast<int>(rng() % static_cast<std::uint64_t>(opts.classes));
        const auto report = nn::gradient_check(model, seq, label, opts.eps, hooks);
        const bool passed = report.passed(opts.tolerance);
        all_passed = all_passed && passed;
        worst = std::max(worst, report.max_rel_error());
        ojson tensors = ojson::array();
        for (const auto& t : report.tensors) {
            tensors.push_back({{"name", t.name},
                               {"entries", t.entries},
                               {"max_abs_error", t.max_abs_error},
                               {"max_rel_error", t.max_rel_error}});
        }
        instances.push_back({{"hidden", opts.hidden},
                             {"input", opts.input},
                             {"steps", opts.steps},
                             {"classes", opts.classes},
                             {"gate_depth", opts.gate_depth},
                             {"label", label},
                             {"max_rel_error", report.max_rel_error()},
                             {"passed", passed},
                             {"tensors", std::move(tensors)}});
    }
    ojson out{{"eps", opts.eps},
              {"tolerance", opts.tolerance},
              {"corrupted", opts.corrupt},
              {"passed", all_passed},
              {"max_rel_error", worst},
              {"instances", std::move(instances)}};
    if (opts.out) write_file_atomic(*opts.out, json_text(out));
    log << fmt::format("gradcheck: {} instance(s), max relative error {:.3e}, tolerance {:.1e}: {}\n",
                       opts.instances, worst, opts.tolerance, all_passed ? "PASS" : "FAIL");
    return all_passed;
}

}  // namespace trafprof::cli
