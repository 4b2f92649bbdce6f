#include "tempofuse/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "tempofuse/eval.hpp"
#include "tempofuse/models_impl.hpp"

namespace tempofuse {

namespace fs = std::filesystem;

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.model = j.value("model", cfg.model);
    if (j.contains("data")) {
        const auto& d = j.at("data");
        cfg.data_mode = d.value("mode", cfg.data_mode);
        cfg.aspm_csv = d.value("aspm_csv", cfg.aspm_csv);
        cfg.events_csv = d.value("events_csv", cfg.events_csv);
        cfg.use_events = d.value("use_events", cfg.use_events);
        cfg.max_fill_gap_bins = d.value("max_fill_gap_bins", cfg.max_fill_gap_bins);
        if (d.contains("profile")) {
            cfg.profile = SynthProfile::from_json(d.at("profile"));
            if (!d.at("profile").contains("seed")) cfg.profile.seed = cfg.seed;
        } else {
            cfg.profile = SynthProfile::defaults();
            cfg.profile.seed = cfg.seed;
        }
    } else {
        cfg.profile = SynthProfile::defaults();
        cfg.profile.seed = cfg.seed;
    }
    if (j.contains("window")) {
        cfg.n_lag = j.at("window").value("n_lag", cfg.n_lag);
        cfg.n_look_ahead = j.at("window").value("n_look_ahead", cfg.n_look_ahead);
    }
    cfg.split_boundary = j.value("split_boundary", cfg.split_boundary);
    if (j.contains("train")) {
        cfg.train = TrainConfig::from_json(j.at("train"));
        if (!j.at("train").contains("seed")) cfg.train.seed = cfg.seed;
    } else {
        cfg.train.seed = cfg.seed;
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["model"] = model;
    j["data"] = {{"mode", data_mode},         {"aspm_csv", aspm_csv},
                 {"events_csv", events_csv},  {"use_events", use_events},
                 {"max_fill_gap_bins", max_fill_gap_bins},
                 {"profile", profile.to_json()}};
    j["window"] = {{"n_lag", n_lag}, {"n_look_ahead", n_look_ahead}};
    j["split_boundary"] = split_boundary;
    j["train"] = train.to_json();
    j["output_dir"] = output_dir;
    return j;
}

std::string RunConfig::config_hash() const {
    // the output directory does not change what a run computes
    nlohmann::json j = to_json();
    j.erase("output_dir");
    return to_hex(fnv1a64(j.dump()));
}

void RunConfig::validate() const {
    if (data_mode != "synthetic" && data_mode != "files") {
        throw UsageError("data.mode must be 'synthetic' or 'files'");
    }
    if (data_mode == "files" && aspm_csv.empty()) {
        throw UsageError("files mode needs data.aspm_csv");
    }
    if (data_mode == "synthetic" && (!aspm_csv.empty() || !events_csv.empty())) {
        throw UsageError("synthetic mode must not name input files (one data source mode only)");
    }
    kind_from_name(model);
    train.validate();
}

WindowSpec resolve_window(const RunConfig& cfg, ForecasterKind kind, bool with_events) {
    std::size_t p = cfg.n_lag;
    if (p == 0) {
        switch (kind) {
            case ForecasterKind::linear_regression: p = 10; break;
            case ForecasterKind::autoregressive: p = 96; break;
            case ForecasterKind::seq2seq: p = 10; break;
            case ForecasterKind::seq2seq_attention: p = 10; break;
            case ForecasterKind::tft: p = 6; break;
        }
    }
    // the event stream supports short look-ahead with frequent updates;
    // daily-batch data alone forecasts a full operational day ahead
    const std::size_t tau = cfg.n_look_ahead != 0 ? cfg.n_look_ahead : (with_events ? 16 : 124);
    return {p, tau};
}

namespace {

struct LoadedData {
    TimeSeriesFrame frame;
    bool has_events = false;
};

TimeSeriesFrame strip_observed(TimeSeriesFrame frame) {
    frame.observed_names.clear();
    frame.observed.clear();
    return frame;
}

LoadedData load_data(const RunConfig& cfg) {
    LoadedData data;
    if (cfg.data_mode == "synthetic") {
        SynthOutput out = synth_generate(cfg.profile);
        data.frame = std::move(out.frame);
        data.has_events = true;
    } else {
        IngestOptions opts;
        opts.max_fill_gap_bins = cfg.max_fill_gap_bins;
        data.frame = ingest_aspm(cfg.aspm_csv, opts);
        if (!cfg.events_csv.empty()) {
            ingest_swim_events(cfg.events_csv, data.frame);
            data.has_events = true;
        }
    }
    if (!cfg.use_events || !data.has_events) {
        data.frame = strip_observed(std::move(data.frame));
        data.has_events = false;
    }
    return data;
}

std::int64_t resolve_boundary(const RunConfig& cfg) {
    if (!cfg.split_boundary.empty()) return parse_utc(cfg.split_boundary);
    if (cfg.data_mode != "synthetic") {
        throw UsageError("files mode needs an explicit split_boundary");
    }
    return parse_utc(cfg.profile.start_date) + 90LL * 96 * kBinSeconds;
}

void write_json_artifact(nlohmann::json body, const fs::path& path, const std::string& hash) {
    body["config_hash"] = hash;
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string());
    os << body.dump(1) << '\n';
}

std::size_t worker_count(std::size_t jobs) {
    const char* env = std::getenv("TEMPOFUSE_THREADS");
    std::size_t threads = 1;
    if (env != nullptr && *env != '\0') {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed > 0) threads = static_cast<std::size_t>(parsed);
    }
    return std::min(threads, jobs);
}

struct FittedModel {
    std::unique_ptr<Forecaster> model;
    TrainReport report;
    TimeSeriesFrame test_frame;
};

FittedModel fit_on(const RunConfig& cfg, ForecasterKind kind, const TimeSeriesFrame& frame,
                   bool with_events) {
    auto [train_frame, test_frame] = split_train_test(frame, resolve_boundary(cfg));
    ScalerParams scaler = ScalerParams::fit(train_frame);
    const WindowSpec window = resolve_window(cfg, kind, with_events);
    WindowedDataset dataset = make_windows(scaler.apply(train_frame), window);
    FittedModel out;
    out.model = make_forecaster(kind, window, scaler, train_frame.observed_names, cfg.train);
    out.report = out.model->fit(dataset, cfg.train);
    out.test_frame = std::move(test_frame);
    return out;
}

int run_synth(const RunConfig& cfg) {
    const std::string hash = cfg.config_hash();
    fs::create_directories(cfg.output_dir);
    SynthOutput out = synth_generate(cfg.profile);
    const fs::path dir(cfg.output_dir);
    write_aspm_csv(out.frame, (dir / "synthetic_aspm.csv").string(), hash);
    write_events_csv(out.event_times, (dir / "synthetic_events.csv").string(), hash);
    write_json_artifact(cfg.profile.to_json(), dir / "profile_used.json", hash);
    std::cout << "wrote " << (dir / "synthetic_aspm.csv").string() << " ("
              << out.frame.size() << " bins), " << (dir / "synthetic_events.csv").string()
              << " (" << out.event_times.size() << " events)\n";
    return 0;
}

int run_train(const RunConfig& cfg) {
    const std::string hash = cfg.config_hash();
    fs::create_directories(cfg.output_dir);
    const ForecasterKind kind = kind_from_name(cfg.model);
    LoadedData data = load_data(cfg);
    FittedModel fitted = fit_on(cfg, kind, data.frame, data.has_events);

    const fs::path dir(cfg.output_dir);
    const fs::path ckpt = dir / ("checkpoint_" + cfg.model + ".json");
    checkpoint_save(*fitted.model, ckpt.string(), hash);
    write_json_artifact(fitted.report.to_json(), dir / ("train_report_" + cfg.model + ".json"),
                        hash);
    std::cerr << "trained " << cfg.model << " in " << fitted.report.wall_seconds << " s ("
              << fitted.report.stopped_epoch << " epochs)\n";
    std::cout << "wrote " << ckpt.string() << '\n';
    return 0;
}

int run_evaluate(const RunConfig& cfg, const std::string& checkpoint) {
    const std::string hash = cfg.config_hash();
    fs::create_directories(cfg.output_dir);
    auto model = checkpoint_load(checkpoint);
    LoadedData data = load_data(cfg);
    if (!model->observed_columns().empty() && !data.has_events) {
        throw DataError("checkpoint expects the observed_departures column; configure events");
    }
    auto [train_frame, test_frame] = split_train_test(data.frame, resolve_boundary(cfg));
    (void)train_frame;
    EvalReport report = evaluate(*model, test_frame);

    const fs::path dir(cfg.output_dir);
    const std::string kind = kind_name(model->kind());
    write_json_artifact(report.to_json(), dir / ("eval_" + kind + ".json"), hash);
    write_plot_csv(plot_series(*model, test_frame), (dir / ("plot_" + kind + ".csv")).string(),
                   hash);
    std::cout << "model " << kind << ": mse " << report.mse << ", mae " << report.mae
              << ", explained_variance " << report.explained_var << " over n=" << report.n
              << '\n';
    return 0;
}

int run_forecast(const RunConfig& cfg, const std::string& checkpoint, const std::string& issue) {
    const std::string hash = cfg.config_hash();
    fs::create_directories(cfg.output_dir);
    auto model = checkpoint_load(checkpoint);
    LoadedData data = load_data(cfg);
    const std::int64_t issued_at = parse_utc(issue);
    RollingForecastTrace trace =
        rolling_forecast(*model, data.frame, issued_at, issued_at + kBinSeconds);

    nlohmann::json body = trace.entries.front().result.to_json();
    body["issued_at"] = format_utc(issued_at);
    body["model"] = kind_name(model->kind());
    const fs::path out = fs::path(cfg.output_dir) / "forecast.json";
    write_json_artifact(body, out, hash);
    std::cout << "wrote " << out.string() << '\n';
    return 0;
}

int run_rolling(const RunConfig& cfg, const std::string& checkpoint, const std::string& start_str,
                const std::string& end_str) {
    const std::string hash = cfg.config_hash();
    fs::create_directories(cfg.output_dir);
    auto model = checkpoint_load(checkpoint);
    LoadedData data = load_data(cfg);
    const WindowSpec& w = model->window();

    const std::int64_t start =
        start_str.empty() ? resolve_boundary(cfg) : parse_utc(start_str);
    const std::int64_t end =
        end_str.empty() ? data.frame.bin_start.back() -
                              static_cast<std::int64_t>(w.tau_max - 2) * kBinSeconds
                        : parse_utc(end_str);
    RollingForecastTrace trace = rolling_forecast(*model, data.frame, start, end);

    const fs::path out = fs::path(cfg.output_dir) /
                         ("rolling_" + std::string(kind_name(model->kind())) + ".csv");
    write_rolling_csv(trace, data.frame, out.string(), hash);
    std::cout << "wrote " << out.string() << " (" << trace.entries.size() << " issue times)\n";
    return 0;
}

int run_compare(const RunConfig& cfg) {
    const std::string hash = cfg.config_hash();
    fs::create_directories(cfg.output_dir);
    LoadedData data = load_data(cfg);

    struct Job {
        ForecasterKind kind;
        bool with_events;
    };
    std::vector<Job> jobs;
    for (ForecasterKind kind : kAllKinds) jobs.push_back({kind, false});
    if (data.has_events) jobs.push_back({ForecasterKind::tft, true});

    const TimeSeriesFrame aspm_only = strip_observed(data.frame);
    std::vector<EvalReport> reports(jobs.size());
    std::vector<std::string> errors(jobs.size());
    const fs::path dir(cfg.output_dir);

    auto run_job = [&](std::size_t i) {
        try {
            const Job& job = jobs[i];
            const TimeSeriesFrame& frame = job.with_events ? data.frame : aspm_only;
            FittedModel fitted = fit_on(cfg, job.kind, frame, job.with_events);
            reports[i] = evaluate(*fitted.model, fitted.test_frame);
            const std::string suffix = job.with_events ? "_aspm_swim" : "_aspm";
            checkpoint_save(*fitted.model,
                            (dir / ("checkpoint_" + std::string(kind_name(job.kind)) + suffix +
                                    ".json"))
                                .string(),
                            hash);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    const std::size_t threads = worker_count(jobs.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
                    run_job(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (const std::string& err : errors) {
        if (!err.empty()) throw DataError("compare job failed: " + err);
    }

    ComparisonTable table = compare_models(std::move(reports));
    write_json_artifact(table.to_json(), dir / "comparison.json", hash);
    {
        std::ofstream os(dir / "comparison.txt");
        os << "# config_hash=" << hash << '\n' << table.to_text();
    }
    std::cout << table.to_text();
    return 0;
}

int run_explain(const RunConfig& cfg, const std::string& checkpoint) {
    const std::string hash = cfg.config_hash();
    fs::create_directories(cfg.output_dir);
    auto model = checkpoint_load(checkpoint);
    LoadedData data = load_data(cfg);
    auto [train_frame, test_frame] = split_train_test(data.frame, resolve_boundary(cfg));
    (void)train_frame;
    WindowedDataset test =
        make_windows(model->scaler().apply(test_frame), model->window());

    VariableImportanceReport importance = variable_importance(*model, test);
    AttentionProfile profile = attention_by_lag(*model, test);

    const fs::path dir(cfg.output_dir);
    write_json_artifact(importance.to_json(), dir / "variable_importance.json", hash);
    write_json_artifact(profile.to_json(), dir / "attention_profile.json", hash);
    {
        std::ofstream os(dir / "attention_profile.csv");
        os << "# config_hash=" << hash << '\n' << "time_index,mean_score\n";
        char buf[48];
        for (std::size_t i = 0; i < profile.relative_index.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%ld,%.17g", profile.relative_index[i],
                          profile.mean_score[i]);
            os << buf << '\n';
        }
    }
    std::cout << "wrote " << (dir / "variable_importance.json").string() << " and "
              << (dir / "attention_profile.json").string() << '\n';
    return 0;
}

nlohmann::json parse_override_value(const std::string& raw) {
    try {
        return nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        return nlohmann::json(raw);  // bare strings stay strings
    }
}

RunConfig build_config(const std::string& config_path, const std::vector<std::string>& sets,
                       long long seed_flag, const std::string& out_flag) {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw UsageError("cannot open config " + config_path);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config " + config_path + " is not valid JSON: " + e.what());
        }
    }
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        std::string pointer = "/" + kv.substr(0, eq);
        for (char& c : pointer) {
            if (c == '.') c = '/';
        }
        j[nlohmann::json::json_pointer(pointer)] = parse_override_value(kv.substr(eq + 1));
    }
    if (seed_flag >= 0) j["seed"] = static_cast<std::uint64_t>(seed_flag);
    if (!out_flag.empty()) j["output_dir"] = out_flag;
    try {
        return RunConfig::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad config: ") + e.what());
    }
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
    CLI::App app{"tempofuse: multi-horizon airport departure-demand forecasting"};
    app.require_subcommand(1);

    struct Opts {
        std::string config;
        std::vector<std::string> sets;
        long long seed = -1;
        std::string out;
        std::string checkpoint;
        std::string issue;
        std::string start, end;
    } opts;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config, "run configuration JSON");
        cmd->add_option("--set", opts.sets, "override a config key, e.g. train.epochs=50");
        cmd->add_option("--seed", opts.seed, "override the top-level seed");
        cmd->add_option("--out", opts.out, "output directory override");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic airport dataset");
    add_common(synth);
    CLI::App* train = app.add_subcommand("train", "fit the configured model, write a checkpoint");
    add_common(train);
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint on the test split");
    add_common(evaluate_cmd);
    evaluate_cmd->add_option("--checkpoint", opts.checkpoint, "model checkpoint")->required();
    CLI::App* forecast_cmd = app.add_subcommand("forecast", "one forecast at a given issue time");
    add_common(forecast_cmd);
    forecast_cmd->add_option("--checkpoint", opts.checkpoint, "model checkpoint")->required();
    forecast_cmd->add_option("--issue", opts.issue, "issuance time (first predicted bin)")
        ->required();
    CLI::App* rolling_cmd =
        app.add_subcommand("rolling", "re-issue forecasts every quarter hour over a window");
    add_common(rolling_cmd);
    rolling_cmd->add_option("--checkpoint", opts.checkpoint, "model checkpoint")->required();
    rolling_cmd->add_option("--start", opts.start, "first issuance time (default: test start)");
    rolling_cmd->add_option("--end", opts.end, "end of issuance window, exclusive");
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "train and score all five models on one dataset");
    add_common(compare_cmd);
    CLI::App* explain_cmd =
        app.add_subcommand("explain", "variable importance and attention profile of a tft");
    add_common(explain_cmd);
    explain_cmd->add_option("--checkpoint", opts.checkpoint, "tft checkpoint")->required();

    std::vector<const char*> argv;
    argv.push_back("tempofuse");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            app.exit(e);
            return 0;
        }
        std::cerr << "error: " << e.what() << '\n';
        std::cerr << app.help() << '\n';
        return 1;
    }

    try {
        const RunConfig cfg = build_config(opts.config, opts.sets, opts.seed, opts.out);
        if (synth->parsed()) return run_synth(cfg);
        if (train->parsed()) return run_train(cfg);
        if (evaluate_cmd->parsed()) return run_evaluate(cfg, opts.checkpoint);
        if (forecast_cmd->parsed()) return run_forecast(cfg, opts.checkpoint, opts.issue);
        if (rolling_cmd->parsed()) return run_rolling(cfg, opts.checkpoint, opts.start, opts.end);
        if (compare_cmd->parsed()) return run_compare(cfg);
        if (explain_cmd->parsed()) return run_explain(cfg, opts.checkpoint);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace tempofuse
