// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavy end-to-end runs go through the CLI entry point exactly as a
// user would drive them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "tempofuse/cli.hpp"
#include "tempofuse/eval.hpp"
#include "tempofuse/models_impl.hpp"

using namespace tempofuse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<Outcome> g_outcomes;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
    g_outcomes.push_back({id, name, pass, detail});
    std::printf("criterion %d (%s): %s — %s\n", id, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
}

void record_error(int id, const std::string& name, const std::string& what) {
    record(id, name, false, "exception: " + what);
}

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "tempofuse_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor rand_tensor(Rng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape), 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.5, 1.5);
    return t;
}

TimeSeriesFrame frame_from_series(const std::vector<double>& y,
                                  std::int64_t start = parse_utc("2019-01-07T00:00:00Z")) {
    TimeSeriesFrame f;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::int64_t ts = start + static_cast<std::int64_t>(i) * kBinSeconds;
        f.bin_start.push_back(ts);
        f.y.push_back(y[i]);
        f.calendar.push_back(derive_calendar(ts));
    }
    return f;
}

// ---------------------------------------------------------------------------
// criterion 1: gradient suite
// ---------------------------------------------------------------------------

bool layer_checks_pass(std::uint64_t seed, std::string& why) {
    Rng rng(seed * 9176 + 11);
    auto weighted_loss = [&rng](Graph& g, NodeId out) {
        NodeId r = g.input(rand_tensor(rng, g.value(out).shape()));
        return g.sum(g.mul(out, r));
    };
    auto check_all = [&](Graph& g, NodeId loss, const char* what) {
        for (NodeId p : g.parameters()) {
            auto rep = grad_check(g, loss, p, 1e-4);
            if (!rep.pass) {
                why = std::string(what) + " seed " + std::to_string(seed) + ": " + rep.summary();
                return false;
            }
        }
        return true;
    };

    {
        ParamStore store;
        auto dense = Dense::create(store, "dense", 3, 4, rng);
        Graph g;
        GraphContext ctx(g, store);
        NodeId out = dense.apply(ctx, ctx.constant(rand_tensor(rng, {2, 3})));
        if (!check_all(g, weighted_loss(g, out), "dense")) return false;
    }
    {
        ParamStore store;
        auto table = EmbeddingTable::create(store, "emb", 5, 3, rng);
        Graph g;
        GraphContext ctx(g, store);
        NodeId out = table.lookup(ctx, static_cast<long>(rng.next_below(5)));
        if (!check_all(g, weighted_loss(g, out), "embedding")) return false;
    }
    {
        ParamStore store;
        auto cell = LstmCell::create(store, "lstm", 3, 4, rng);
        Graph g;
        GraphContext ctx(g, store);
        auto st = cell.zero_state(ctx);
        for (int t = 0; t < 2; ++t) st = cell.step(ctx, ctx.constant(rand_tensor(rng, {1, 3})), st);
        if (!check_all(g, weighted_loss(g, g.concat({st.h, st.c}, 1)), "lstm")) return false;
    }
    {
        ParamStore store;
        auto att = LuongAttention::create(store, "att", 4, rng);
        Graph g;
        GraphContext ctx(g, store);
        auto res = att.apply(ctx, ctx.constant(rand_tensor(rng, {1, 4})),
                             ctx.constant(rand_tensor(rng, {3, 4})));
        if (!check_all(g, weighted_loss(g, res.context), "luong")) return false;
    }
    {
        ParamStore store;
        auto blk = GatedResidualBlock::create(store, "grn", 4, rng, 2);
        Graph g;
        GraphContext ctx(g, store);
        NodeId out = blk.apply(ctx, ctx.constant(rand_tensor(rng, {2, 4})),
                               ctx.constant(rand_tensor(rng, {1, 2})));
        if (!check_all(g, weighted_loss(g, out), "grn")) return false;
    }
    {
        ParamStore store;
        auto vs = VariableSelection::create(store, "vs", 2, 3, rng);
        Graph g;
        GraphContext ctx(g, store);
        auto res = vs.apply(ctx, {ctx.constant(rand_tensor(rng, {2, 3})),
                                  ctx.constant(rand_tensor(rng, {2, 3}))});
        if (!check_all(g, weighted_loss(g, res.combined), "variable_selection")) return false;
    }
    {
        ParamStore store;
        auto mha = InterpretableMultiHead::create(store, "mha", 4, 2, rng);
        Graph g;
        GraphContext ctx(g, store);
        const std::size_t tau = 2, L = 4;
        std::vector<std::uint8_t> keep(tau * L, 0);
        for (std::size_t q = 0; q < tau; ++q) {
            for (std::size_t k = 0; k <= 2 + q && k < L; ++k) keep[q * L + k] = 1;
        }
        auto res = mha.apply(ctx, ctx.constant(rand_tensor(rng, {tau, 4})),
                             ctx.constant(rand_tensor(rng, {L, 4})), keep);
        if (!check_all(g, weighted_loss(g, res.output), "interpretable_mha")) return false;
    }
    {
        ParamStore store;
        auto head = QuantileHead::create(store, "qh", 3, {0.25, 0.5, 0.75}, rng);
        Graph g;
        GraphContext ctx(g, store);
        NodeId out = head.apply_raw(ctx, ctx.constant(rand_tensor(rng, {2, 3})));
        if (!check_all(g, weighted_loss(g, out), "quantile_head")) return false;
    }
    return true;
}

void criterion_1() {
    const char* name = "gradient suite";
    try {
        const auto t0 = std::chrono::steady_clock::now();
        SynthProfile profile = SynthProfile::defaults();
        profile.days = 1;
        profile.seed = 404;
        const TimeSeriesFrame frame = synth_generate(profile).frame;
        const WindowSpec spec{3, 2};
        ScalerParams scaler = ScalerParams::fit(frame);
        WindowedDataset data = make_windows(scaler.apply(frame), spec);

        std::string why;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            if (!layer_checks_pass(seed, why)) {
                record(1, name, false, why);
                return;
            }
            for (ForecasterKind kind : {ForecasterKind::seq2seq, ForecasterKind::seq2seq_attention,
                                        ForecasterKind::tft}) {
                TrainConfig cfg;
                cfg.hidden_dim = 4;
                cfg.embedding_dim = 2;
                cfg.attention_heads = 2;
                cfg.dropout_rate = 0.0;
                cfg.seed = seed * 31 + 5;
                auto model = make_forecaster(kind, spec, scaler, frame.observed_names, cfg);
                auto* deep = dynamic_cast<DeepForecaster*>(model.get());
                Graph g;
                GraphContext ctx(g, deep->params());
                NodeId loss = deep->build_sample_loss(ctx, data,
                                                      seed % data.sample_count());
                for (NodeId p : g.parameters()) {
                    auto rep = grad_check(g, loss, p, 1e-3);
                    if (!rep.pass) {
                        record(1, name, false,
                               std::string(kind_name(kind)) + " seed " + std::to_string(seed) +
                                   ": " + rep.summary());
                        return;
                    }
                }
            }
        }
        const double elapsed = seconds_since(t0);
        char detail[160];
        std::snprintf(detail, sizeof(detail),
                      "20 seeds, every layer at 1e-4 and all three deep models at 1e-3, %.1f s "
                      "(limit 60)",
                      elapsed);
        record(1, name, elapsed < 60.0, detail);
    } catch (const std::exception& e) {
        record_error(1, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 2: closed-form oracle equivalence
// ---------------------------------------------------------------------------

std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        }
        for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
        std::swap(b[col], b[pivot]);
        const double d = a[col * n + col];
        for (std::size_t c = 0; c < n; ++c) a[col * n + c] /= d;
        b[col] /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a[r * n + col] == 0.0) continue;
            const double f = a[r * n + col];
            for (std::size_t c = 0; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    return b;
}

void criterion_2() {
    const char* name = "oracle equivalence";
    try {
        // fit_linear against an independently solved normal-equations system
        SynthProfile profile = SynthProfile::defaults();
        profile.days = 2;
        profile.seed = 77;
        const TimeSeriesFrame frame = synth_generate(profile).frame;
        const WindowSpec spec{3, 2};
        ScalerParams scaler = ScalerParams::fit(frame);
        WindowedDataset data = make_windows(scaler.apply(frame), spec);
        TrainConfig cfg;
        auto lr = make_forecaster(ForecasterKind::linear_regression, spec, scaler,
                                  frame.observed_names, cfg);
        lr->fit(data, cfg);

        const std::size_t dim = linear_feature_count(spec, 1);
        double worst_lr = 0.0;
        for (std::size_t horizon = 0; horizon < spec.tau_max; ++horizon) {
            // the same normal equations the model assembles, solved by an
            // independent elimination route
            std::vector<double> xtx(dim * dim, 0.0), xty(dim, 0.0);
            for (std::size_t k = 0; k < data.sample_count(); ++k) {
                const auto row = linear_design_row(data.sample_input(k), horizon, 1);
                for (const auto& [ia, va] : row) {
                    xty[ia] += va * data.label(k, horizon);
                    for (const auto& [ib, vb] : row) xtx[ia * dim + ib] += va * vb;
                }
            }
            for (std::size_t d = 0; d + 1 < dim; ++d) xtx[d * dim + d] += kLinearRidge;
            std::vector<double> x = gauss_solve(xtx, xty, dim);
            for (int round = 0; round < 2; ++round) {  // refinement for the oracle too
                std::vector<double> r(dim);
                for (std::size_t i = 0; i < dim; ++i) {
                    long double acc = xty[i];
                    for (std::size_t k2 = 0; k2 < dim; ++k2) {
                        acc -= static_cast<long double>(xtx[i * dim + k2]) * x[k2];
                    }
                    r[i] = static_cast<double>(acc);
                }
                const std::vector<double> dx = gauss_solve(xtx, r, dim);
                for (std::size_t i = 0; i < dim; ++i) x[i] += dx[i];
            }

            const auto& beta = linear_coefficients(*lr, horizon);
            for (std::size_t i = 0; i < dim; ++i) {
                worst_lr = std::max(worst_lr, std::fabs(beta[i] - x[i]));
            }
        }

        // fit_ar on a noise-free AR(2)
        std::vector<double> series{1.0, -0.5};
        for (int t = 2; t < 16; ++t) {
            series.push_back(0.5 * series[series.size() - 1] + 0.3 * series[series.size() - 2]);
        }
        const ARParams params = fit_ar(series, 2);
        const double worst_ar =
            std::max(std::fabs(params.phi[0] - 0.5), std::fabs(params.phi[1] - 0.3));

        char detail[160];
        std::snprintf(detail, sizeof(detail),
                      "linear max |beta - oracle| = %.2e (limit 1e-8); AR(2) max |phi - truth| = "
                      "%.2e (limit 1e-6)",
                      worst_lr, worst_ar);
        record(2, name, worst_lr <= 1e-8 && worst_ar <= 1e-6, detail);
    } catch (const std::exception& e) {
        record_error(2, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 3: metric fidelity
// ---------------------------------------------------------------------------

void criterion_3() {
    const char* name = "metric fidelity";
    try {
        struct Case {
            std::vector<double> y, yhat;
            double mse, mae;
        };
        // arithmetic chosen so the averages are exact in binary
        const std::vector<Case> cases = {
            {{1, 2, 3}, {1, 2, 3}, 0.0, 0.0},
            {{0, 4}, {2, 2}, 4.0, 2.0},
            {{2, 4, 6, 4}, {1, 2, 3, 2}, 4.5, 2.0},
            {{5}, {3}, 4.0, 2.0},
            {{1, 1, 1, 1}, {0, 2, 0, 2}, 1.0, 1.0},
            {{10, 0}, {0, 10}, 100.0, 10.0},
            {{3, 3, 3, 3, 3, 3, 3, 3}, {3, 3, 3, 3, 7, 3, 3, 3}, 2.0, 0.5},
            {{0, 0, 0, 0}, {1, 2, 3, 2}, 4.5, 2.0},
            {{6, 2}, {2, 6}, 16.0, 4.0},
            {{1.5, 2.5}, {0.5, 1.5}, 1.0, 1.0},
            {{8, 6, 4, 2}, {7, 5, 3, 1}, 1.0, 1.0},
            {{0, 2, 4, 6}, {6, 4, 2, 0}, 20.0, 4.0},
        };
        std::size_t bad = 0;
        for (const Case& c : cases) {
            if (compute_mse(c.y, c.yhat) != c.mse || compute_mae(c.y, c.yhat) != c.mae) ++bad;
        }
        struct EvCase {
            std::vector<double> y, yhat;
            double ev;
        };
        const std::vector<EvCase> ev_cases = {
            {{0, 4}, {0, 4}, 1.0},
            {{0, 4}, {1, 5}, 1.0},
            {{0, 4, 0, 4}, {2, 2, 2, 2}, 0.0},
            {{0, 8}, {2, 6}, 0.75},
            {{0, 4}, {4, 0}, -3.0},
        };
        for (const EvCase& c : ev_cases) {
            if (explained_variance(c.y, c.yhat) != c.ev) ++bad;
        }

        // the reference comparison column recomputed from the reference mse figures
        const std::vector<double> reference_mse = {7.63, 8.91, 6.53, 6.27, 5.99, 5.83};
        const std::vector<double> reference_pct = {-31, -53, -12, -7, -3, 0};
        std::vector<EvalReport> reports(reference_mse.size());
        for (std::size_t i = 0; i < reports.size(); ++i) reports[i].mse = reference_mse[i];
        ComparisonTable table = compare_models(reports);
        double worst_pct_gap = 0.0;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            worst_pct_gap = std::max(
                worst_pct_gap,
                std::fabs(table.rows[i].mse_comparison * 100.0 - reference_pct[i]));
        }

        char detail[200];
        std::snprintf(detail, sizeof(detail),
                      "%zu fixed mse/mae/ev vectors exact (%zu mismatches); comparison column "
                      "within %.2f pp of the reference -31/-53/-12/-7/-3/0",
                      cases.size() + ev_cases.size(), bad, worst_pct_gap);
        record(3, name, bad == 0 && worst_pct_gap < 1.0, detail);
    } catch (const std::exception& e) {
        record_error(3, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 4: directional ranking at desk scale (full compare through the CLI)
// ---------------------------------------------------------------------------

nlohmann::json g_comparison;  // kept for later criteria
fs::path g_compare_dir;

void criterion_4() {
    const char* name = "directional ranking";
    try {
        g_compare_dir = work_dir() / "compare";
        fs::create_directories(g_compare_dir);
        const fs::path cfg_path = g_compare_dir / "config.json";
        {
            nlohmann::json j;
            j["seed"] = 42;
            j["data"] = {{"mode", "synthetic"}, {"use_events", true}};
            j["window"] = {{"n_look_ahead", 16}};
            j["split_boundary"] = "2019-04-01T00:00:00Z";  // 90 train + 14 test days
            j["train"] = {{"epochs", 40},          {"batch_size", 32},
                          {"hidden_dim", 8},       {"embedding_dim", 4},
                          {"attention_heads", 2},  {"dropout_rate", 0.1},
                          {"learning_rate", 0.003}, {"early_stop_patience", 12}};
            j["output_dir"] = g_compare_dir.string();
            std::ofstream(cfg_path) << j.dump(1);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const int code = cli_dispatch({"compare", "--config", cfg_path.string()});
        const double elapsed = seconds_since(t0);
        if (code != 0) {
            record(4, name, false, "compare exited with code " + std::to_string(code));
            return;
        }
        std::ifstream(g_compare_dir / "comparison.json") >> g_comparison;
        const auto& rows = g_comparison.at("rows");
        double mse_ar = 0, mse_s2s = 0, mse_tft = 0, best5 = 1e18;
        for (const auto& row : rows) {
            if (row.at("data") != "ASPM") continue;
            const double mse = row.at("mse").get<double>();
            best5 = std::min(best5, mse);
            if (row.at("model") == "autoregressive") mse_ar = mse;
            if (row.at("model") == "seq2seq") mse_s2s = mse;
            if (row.at("model") == "tft") mse_tft = mse;
        }
        const bool ranking = mse_s2s < mse_ar && mse_tft <= 1.05 * best5;
        char detail[240];
        std::snprintf(detail, sizeof(detail),
                      "seq2seq %.2f < AR %.2f; tft %.2f <= 1.05 x best %.2f; compare took %.0f s "
                      "(limit 900)",
                      mse_s2s, mse_ar, mse_tft, best5, elapsed);
        record(4, name, ranking && elapsed < 900.0, detail);
    } catch (const std::exception& e) {
        record_error(4, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 5: quantile calibration of the event-stream tft
// ---------------------------------------------------------------------------

void criterion_5() {
    const char* name = "quantile calibration";
    try {
        auto model = checkpoint_load((g_compare_dir / "checkpoint_tft_aspm_swim.json").string());
        SynthProfile profile = SynthProfile::defaults();
        profile.seed = 42;
        const TimeSeriesFrame frame = synth_generate(profile).frame;
        auto [train_part, test_part] =
            split_train_test(frame, parse_utc("2019-04-01T00:00:00Z"));
        (void)train_part;

        const TimeSeriesFrame scaled = model->scaler().apply(test_part);
        WindowedDataset windows = make_windows(scaled, model->window());
        WindowedDataset truth = make_windows(test_part, model->window());
        std::size_t covered = 0, total = 0;
        for (std::size_t k = 0; k < windows.sample_count(); ++k) {
            const ForecastResult res = model->forecast(windows.sample_input(k));
            for (std::size_t j = 0; j < res.values.size(); ++j) {
                const double y = truth.label(k, j);
                if (res.values[j].front() <= y && y <= res.values[j].back()) ++covered;
                ++total;
            }
        }
        const double coverage = static_cast<double>(covered) / static_cast<double>(total);
        char detail[160];
        std::snprintf(detail, sizeof(detail),
                      "[0.25, 0.75] interval covered %.3f of %zu held-out bins (accept 0.35-0.65)",
                      coverage, total);
        record(5, name, coverage >= 0.35 && coverage <= 0.65, detail);
    } catch (const std::exception& e) {
        record_error(5, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 6: rolling updates beat long-horizon forecasts
// ---------------------------------------------------------------------------

void criterion_6() {
    const char* name = "rolling-update improvement";
    try {
        auto model = checkpoint_load((g_compare_dir / "checkpoint_tft_aspm_swim.json").string());
        SynthProfile profile = SynthProfile::defaults();
        profile.seed = 42;
        const TimeSeriesFrame frame = synth_generate(profile).frame;

        const std::int64_t start = parse_utc("2019-04-01T00:00:00Z");
        const std::int64_t end =
            frame.bin_start.back() -
            static_cast<std::int64_t>(model->window().tau_max - 2) * kBinSeconds;
        RollingForecastTrace trace = rolling_forecast(*model, frame, start, end);
        const std::vector<double> maes = rolling_horizon_mae(trace, frame);
        char detail[160];
        std::snprintf(detail, sizeof(detail),
                      "horizon-1 mae %.3f vs horizon-16 mae %.3f over %zu issue times",
                      maes.front(), maes.back(), trace.entries.size());
        record(6, name, maes.front() < maes.back(), detail);
    } catch (const std::exception& e) {
        record_error(6, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 7: interpretability sanity on constructed signals
// ---------------------------------------------------------------------------

void criterion_7() {
    const char* name = "interpretability sanity";
    try {
        // (a) demand that is a pure function of hour-of-day, over a span long
        // enough that day-of-week and month vary without carrying signal
        SynthProfile profile = SynthProfile::defaults();
        profile.seed = 42;
        profile.days = 120;
        profile.noise = 0.0;
        profile.dow_multipliers.fill(1.0);
        profile.surge_probability = 0.0;
        const TimeSeriesFrame hour_frame = [&] {
            TimeSeriesFrame f = synth_generate(profile).frame;
            f.observed_names.clear();
            f.observed.clear();
            return f;
        }();
        auto [hour_train, hour_test] =
            split_train_test(hour_frame, parse_utc("2019-04-17T00:00:00Z"));
        ScalerParams hour_scaler = ScalerParams::fit(hour_train);
        const WindowSpec hour_spec{6, 4};
        TrainConfig cfg;
        cfg.hidden_dim = 8;
        cfg.embedding_dim = 8;
        cfg.attention_heads = 2;
        cfg.dropout_rate = 0.1;
        cfg.learning_rate = 0.003;
        cfg.early_stop_patience = 12;
        cfg.epochs = 25;
        cfg.batch_size = 32;
        cfg.seed = 42;
        auto hour_tft = make_forecaster(ForecasterKind::tft, hour_spec, hour_scaler, {}, cfg);
        hour_tft->fit(make_windows(hour_scaler.apply(hour_train), hour_spec), cfg);
        VariableImportanceReport vi = variable_importance(
            *hour_tft, make_windows(hour_scaler.apply(hour_test), hour_spec));
        std::size_t top = 0;
        for (std::size_t v = 1; v < vi.future_importance.size(); ++v) {
            if (vi.future_importance[v] > vi.future_importance[top]) top = v;
        }
        const bool hour_wins = vi.future_variables[top] == "hour";

        // (b) strongly autocorrelated demand with no calendar structure (the
        // level decorrelates within the lag window, so the nearest bins are
        // the informative ones)
        std::vector<double> series;
        Rng noise(4242);
        double level = 8.0;
        for (int i = 0; i < 96 * 18; ++i) {
            level = 8.0 + 0.7 * (level - 8.0) + noise.uniform(-3.0, 3.0);
            series.push_back(std::max(0.0, level));
        }
        TimeSeriesFrame ar_frame = frame_from_series(series);
        auto [ar_train, ar_test] =
            split_train_test(ar_frame, ar_frame.bin_start[96 * 14]);
        ScalerParams ar_scaler = ScalerParams::fit(ar_train);
        const WindowSpec ar_spec{6, 4};
        auto ar_tft = make_forecaster(ForecasterKind::tft, ar_spec, ar_scaler, {}, cfg);
        ar_tft->fit(make_windows(ar_scaler.apply(ar_train), ar_spec), cfg);
        AttentionProfile ap =
            attention_by_lag(*ar_tft, make_windows(ar_scaler.apply(ar_test), ar_spec));
        // indices -p..tau-1; compare the two most recent lags to the two oldest
        const double recent = (ap.mean_score[ar_spec.p - 1] + ap.mean_score[ar_spec.p - 2]) / 2.0;
        const double oldest = (ap.mean_score[0] + ap.mean_score[1]) / 2.0;
        const bool recency = recent > oldest;

        char detail[220];
        std::snprintf(detail, sizeof(detail),
                      "hour importance %.3f is %sthe largest future-known weight; attention at "
                      "lags {-1,-2} %.4f vs oldest two %.4f",
                      vi.future_importance[top], hour_wins ? "" : "NOT ", recent, oldest);
        record(7, name, hour_wins && recency, detail);
    } catch (const std::exception& e) {
        record_error(7, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 8: pipeline invariants, property-tested
// ---------------------------------------------------------------------------

void criterion_8() {
    const char* name = "pipeline invariants";
    try {
        Rng rng(808);
        std::string why;
        bool ok = true;

        for (int trial = 0; trial < 50 && ok; ++trial) {
            const std::size_t p = 1 + rng.next_below(8);
            const std::size_t tau = 1 + rng.next_below(8);
            const std::size_t n = p + tau + rng.next_below(40);
            std::vector<double> y(n);
            for (double& v : y) v = rng.uniform(0.0, 30.0);
            WindowedDataset ds = make_windows(frame_from_series(y), {p, tau});
            if (ds.sample_count() != n - p - tau + 1) {
                ok = false;
                why = "window count formula";
                break;
            }
            for (std::size_t k = 0; k < ds.sample_count(); k += 1 + ds.sample_count() / 5) {
                if (!(ds.issue_time(k) < ds.label_time(k, 0))) {
                    ok = false;
                    why = "label leakage";
                    break;
                }
            }
        }

        for (int trial = 0; trial < 50 && ok; ++trial) {
            std::vector<double> y(30);
            for (double& v : y) v = rng.uniform(0.0, 200.0);
            TimeSeriesFrame f = frame_from_series(y);
            ScalerParams s = ScalerParams::fit(f);
            for (double v : y) {
                if (std::fabs(s.invert_value("y", s.apply_value("y", v)) - v) > 1e-12) {
                    ok = false;
                    why = "scaler round trip beyond 1e-12";
                    break;
                }
            }
        }

        for (int trial = 0; trial < 10 && ok; ++trial) {
            SynthProfile profile = SynthProfile::defaults();
            profile.days = 1 + static_cast<int>(rng.next_below(4));
            profile.seed = rng.next_u64();
            profile.surge_probability = 0.01;
            SynthOutput out = synth_generate(profile);
            const fs::path events = work_dir() / "events_roundtrip.csv";
            write_events_csv(out.event_times, events.string());
            TimeSeriesFrame replay = out.frame;
            replay.observed_names.clear();
            replay.observed.clear();
            ingest_swim_events(events.string(), replay);
            if (replay.observed_column("observed_departures") !=
                out.frame.observed_column("observed_departures")) {
                ok = false;
                why = "synthetic event file round trip not exact";
            }
        }

        record(8, name, ok,
               ok ? "window-count formula, 1e-12 scaler round trip, no label leakage, exact "
                    "event round trip over randomized instances"
                  : why);
    } catch (const std::exception& e) {
        record_error(8, name, e.what());
    }
}

// ---------------------------------------------------------------------------
// criterion 9: end-to-end determinism
// ---------------------------------------------------------------------------

void criterion_9() {
    const char* name = "determinism";
    try {
        auto chain = [&](const std::string& tag) {
            const fs::path out = work_dir() / tag;
            fs::create_directories(out);
            std::vector<std::string> base = {"--seed", "42",
                                             "--out", out.string(),
                                             "--set", "data.profile.days=8",
                                             "--set", "model=seq2seq_attention",
                                             "--set", "window.n_lag=4",
                                             "--set", "window.n_look_ahead=4",
                                             "--set", "train.epochs=3",
                                             "--set", "train.hidden_dim=8",
                                             "--set", "train.embedding_dim=2",
                                             "--set", "train.attention_heads=2",
                                             "--set",
                                             "split_boundary=\"2019-01-07T00:00:00Z\""};
            std::vector<std::string> synth_args = base;
            synth_args.insert(synth_args.begin(), "synth");
            if (cli_dispatch(synth_args) != 0) throw DataError("synth failed");
            std::vector<std::string> train_args = base;
            train_args.insert(train_args.begin(), "train");
            if (cli_dispatch(train_args) != 0) throw DataError("train failed");
            std::vector<std::string> eval_args = base;
            eval_args.insert(eval_args.begin(), "evaluate");
            eval_args.push_back("--checkpoint");
            eval_args.push_back((out / "checkpoint_seq2seq_attention.json").string());
            if (cli_dispatch(eval_args) != 0) throw DataError("evaluate failed");
            return out;
        };
        const fs::path a = chain("det_a");
        const fs::path b = chain("det_b");
        bool ok = true;
        std::string first_diff;
        for (const char* f :
             {"synthetic_aspm.csv", "synthetic_events.csv", "profile_used.json",
              "checkpoint_seq2seq_attention.json", "train_report_seq2seq_attention.json",
              "eval_seq2seq_attention.json", "plot_seq2seq_attention.csv"}) {
            if (slurp(a / f) != slurp(b / f)) {
                ok = false;
                first_diff = f;
                break;
            }
        }
        record(9, name, ok,
               ok ? "synth, train, evaluate artifacts byte-identical across repeated seeded runs"
                  : "artifact differs between runs: " + first_diff);
    } catch (const std::exception& e) {
        record_error(9, name, e.what());
    }
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();

    int failures = 0;
    for (const Outcome& o : g_outcomes) {
        if (!o.pass) ++failures;
    }
    std::printf("%zu criteria, %d failed\n", g_outcomes.size(), failures);
    return failures == 0 ? 0 : 1;
}
