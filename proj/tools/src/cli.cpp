#include "trafprof_cli/cli.hpp"

#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "trafprof/error.hpp"
#include "trafprof_cli/commands.hpp"

namespace trafprof::cli {

namespace {

/// Flags shared by every subcommand that reads the config file.
struct CommonFlags {
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;

    void add(CLI::App& cmd) {
        cmd.add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
        cmd.add_option("--seed", seed, "root seed for every random substream");
    }

    /// Loads the config file and applies `overrides` (key, value) on top.
    RunConfig load(const std::vector<std::pair<std::string, std::optional<std::string>>>& overrides = {}) const {
        KvConfig kv = config ? KvConfig::load(*config) : KvConfig{};
        if (seed) {
            kv.set("seed", std::to_string(*seed));
            kv.set("synth.seed", std::to_string(*seed));
        }
        for (const auto& [key, value] : overrides) {
            if (value) kv.set(key, *value);
        }
        return run_config_from_kv(std::move(kv));
    }
};

template <typename T>
std::optional<std::string> text(const std::optional<T>& v) {
    if (!v) return std::nullopt;
    if constexpr (std::is_same_v<T, std::string>) {
        return *v;
    } else {
        return fmt::format("{}", *v);
    }
}

fs::path or_default(const std::optional<fs::path>& flag, const fs::path& fallback) {
    return flag ? *flag : fallback;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Encrypted traffic activity classification and user profiling", "trafprof"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "trafprof 0.1.0");

    // synth
    CommonFlags synth_flags;
    std::optional<double> synth_scale;
    std::optional<fs::path> synth_out;
    std::optional<int> synth_users, synth_events;
    auto* synth = app.add_subcommand("synth", "generate labeled synthetic captures and user event logs");
    synth_flags.add(*synth);
    synth->add_option("--scale", synth_scale, "multiplier on every class count");
    synth->add_option("--out", synth_out, "output directory (default paths.data)");
    synth->add_option("--users", synth_users, "number of synthetic users");
    synth->add_option("--events", synth_events, "events per synthetic user");

    // ingest
    CommonFlags ingest_flags;
    IngestOptions ingest_opts;
    std::optional<std::string> ingest_device;
    std::optional<fs::path> ingest_labels, ingest_report;
    auto* ingest = app.add_subcommand("ingest", "parse pcaps into labeled stream records (JSONL)");
    ingest_flags.add(*ingest);
    ingest->add_option("inputs", ingest_opts.inputs, "pcap files, pcap directories or synth output directories")
        ->required();
    ingest->add_option("--out", ingest_opts.out, "streams JSONL output")->required();
    ingest->add_option("--device-ip", ingest_device, "address of the monitored device");
    ingest->add_option("--labels", ingest_labels, "labels JSONL to attach");
    ingest->add_option("--report", ingest_report, "ingest report JSON output");

    // train
    CommonFlags train_flags;
    std::string train_model = "lstm";
    std::optional<fs::path> train_streams, train_out;
    std::optional<int> train_batches, train_batch_size, train_hidden, train_depth, train_threads;
    std::optional<double> train_lr, train_test_fraction;
    auto* train = app.add_subcommand("train", "train an LSTM ensemble or a flow-statistics baseline");
    train_flags.add(*train);
    train->add_option("--streams", train_streams, "streams JSONL (default <paths.data>/streams.jsonl)");
    train->add_option("--model", train_model, "model family")->check(CLI::IsMember({"lstm", "forest", "svm"}));
    train->add_option("--out", train_out, "bundle directory (default paths.model)");
    train->add_option("--batches", train_batches, "LSTM training batches");
    train->add_option("--batch-size", train_batch_size, "LSTM batch size");
    train->add_option("--lr", train_lr, "Adam learning rate");
    train->add_option("--hidden", train_hidden, "LSTM hidden size");
    train->add_option("--gate-depth", train_depth, "gate depth of the activity classifiers");
    train->add_option("--test-fraction", train_test_fraction, "held-out fraction per class");
    train->add_option("--threads", train_threads, "forest training threads");

    // eval
    CommonFlags eval_flags;
    std::optional<fs::path> eval_bundle, eval_streams, eval_out;
    bool eval_all = false;
    auto* eval = app.add_subcommand("eval", "score a bundle: metrics JSON, confusion CSVs, prediction dump");
    eval_flags.add(*eval);
    eval->add_option("--bundle", eval_bundle, "bundle directory (default paths.model)");
    eval->add_option("--streams", eval_streams, "streams JSONL (default <paths.data>/streams.jsonl)");
    eval->add_option("--out", eval_out, "output directory (default paths.out)");
    eval->add_flag("--all", eval_all, "score every stream, not just the held-out split");

    // profile
    auto* profile = app.add_subcommand("profile", "naive Bayes trait models over per-user event counts");
    profile->require_subcommand(1);
    CommonFlags ptrain_flags;
    ProfileTrainOptions ptrain_opts;
    std::optional<double> ptrain_alpha, ptrain_holdout;
    auto* ptrain = profile->add_subcommand("train", "fit one model per trait");
    ptrain_flags.add(*ptrain);
    ptrain->add_option("--events", ptrain_opts.events, "event log JSONL")->required();
    ptrain->add_option("--truth", ptrain_opts.truth, "user trait labels JSON")->required();
    ptrain->add_option("--traits", ptrain_opts.traits, "trait vocabulary JSON (default paths.traits)");
    ptrain->add_option("--out", ptrain_opts.out, "trait model JSON")->required();
    ptrain->add_option("--alpha", ptrain_alpha, "Laplace smoothing");
    ptrain->add_option("--holdout", ptrain_holdout, "fraction of users held out from training");

    ProfilePredictOptions ppredict_opts;
    auto* ppredict = profile->add_subcommand("predict", "trait posteriors for every user");
    ppredict->add_option("--model", ppredict_opts.model, "trait model JSON")->required();
    ppredict->add_option("--events", ppredict_opts.events, "event log JSONL");
    ppredict->add_option("--out", ppredict_opts.out, "posteriors JSONL")->required();
    ppredict->add_option("--user", ppredict_opts.users, "also score this user (repeatable)");
    ppredict->add_flag("--holdout-only", ppredict_opts.holdout_only, "score only users held out in training");
    ppredict->add_option("--truth", ppredict_opts.truth, "user trait labels JSON for an accuracy report");
    ppredict->add_option("--report", ppredict_opts.report, "accuracy report JSON output");

    // gradcheck
    CommonFlags grad_flags;
    GradcheckOptions grad_opts;
    auto* grad = app.add_subcommand("gradcheck", "compare BPTT gradients with central differences");
    grad_flags.add(*grad);
    grad->add_option("--hidden", grad_opts.hidden, "hidden size")->capture_default_str();
    grad->add_option("--input", grad_opts.input, "input size")->capture_default_str();
    grad->add_option("--steps", grad_opts.steps, "sequence length")->capture_default_str();
    grad->add_option("--classes", grad_opts.classes, "output classes")->capture_default_str();
    grad->add_option("--gate-depth", grad_opts.gate_depth, "gate depth")->capture_default_str();
    grad->add_option("--instances", grad_opts.instances, "random instances")->capture_default_str();
    grad->add_option("--eps", grad_opts.eps, "finite difference step")->capture_default_str();
    grad->add_option("--tolerance", grad_opts.tolerance, "max relative error")->capture_default_str();
    grad->add_flag("--corrupt", grad_opts.corrupt, "drop the recurrent gradient path (negative control)");
    grad->add_option("--out", grad_opts.out, "report JSON output");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            const auto cfg = synth_flags.load({{"synth.scale", text(synth_scale)},
                                               {"users.count", text(synth_users)},
                                               {"users.events", text(synth_events)}});
            cmd_synth(cfg, or_default(synth_out, cfg.data_dir), out);
        } else if (ingest->parsed()) {
            const auto cfg = ingest_flags.load({{"ingest.device_ip", text(ingest_device)}});
            ingest_opts.labels = ingest_labels;
            ingest_opts.report = ingest_report;
            cmd_ingest(cfg, ingest_opts, out);
        } else if (train->parsed()) {
            const auto cfg = train_flags.load({{"train.batches", text(train_batches)},
                                               {"train.batch_size", text(train_batch_size)},
                                               {"train.lr", text(train_lr)},
                                               {"train.hidden", text(train_hidden)},
                                               {"train.gate_depth", text(train_depth)},
                                               {"train.test_fraction", text(train_test_fraction)},
                                               {"forest.threads", text(train_threads)}});
            TrainOptions opts;
            opts.streams = or_default(train_streams, cfg.data_dir.empty() ? fs::path{} : cfg.data_dir / "streams.jsonl");
            opts.model = parse_model_kind(train_model);
            opts.out = or_default(train_out, cfg.model_dir);
            cmd_train(cfg, opts, out);
        } else if (eval->parsed()) {
            const auto cfg = eval_flags.load();
            EvalOptions opts;
            opts.bundle = or_default(eval_bundle, cfg.model_dir);
            opts.streams = or_default(eval_streams, cfg.data_dir.empty() ? fs::path{} : cfg.data_dir / "streams.jsonl");
            opts.out = or_default(eval_out, cfg.out_dir);
            opts.all = eval_all;
            cmd_eval(opts, out);
        } else if (ptrain->parsed()) {
            const auto cfg =
                ptrain_flags.load({{"profile.alpha", text(ptrain_alpha)}, {"profile.holdout", text(ptrain_holdout)}});
            cmd_profile_train(cfg, ptrain_opts, out);
        } else if (ppredict->parsed()) {
            cmd_profile_predict(ppredict_opts, out);
        } else if (grad->parsed()) {
            const auto cfg = grad_flags.load();
            return cmd_gradcheck(cfg, grad_opts, out) ? kExitOk : kExitCheckFailed;
        }
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed JSON input: " << e.what() << "\n";
        return kExitDataError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}

}  // namespace trafprof::cli
