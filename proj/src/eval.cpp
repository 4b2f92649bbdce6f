#include "tempofuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tempofuse/models_impl.hpp"

namespace tempofuse {

namespace {

void check_pair(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size()) {
        throw DataError("metric inputs differ in length: " + std::to_string(y.size()) + " vs " +
                        std::to_string(y_hat.size()));
    }
    if (y.empty()) throw DataError("metric inputs are empty");
}

double population_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size());
}

std::string display_name(const std::string& kind) {
    if (kind == "linear_regression") return "Linear_Regression";
    if (kind == "autoregressive") return "Autoregressive";
    if (kind == "seq2seq") return "Seq2Seq";
    if (kind == "seq2seq_attention") return "Seq2Seq_Attention";
    if (kind == "tft") return "TFT";
    return kind;
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

}  // namespace

double compute_mse(const std::vector<double>& y, const std::vector<double>& y_hat) {
    check_pair(y, y_hat);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    return acc / static_cast<double>(y.size());
}

double compute_mae(const std::vector<double>& y, const std::vector<double>& y_hat) {
    check_pair(y, y_hat);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::fabs(y[i] - y_hat[i]);
    return acc / static_cast<double>(y.size());
}

double explained_variance(const std::vector<double>& y, const std::vector<double>& y_hat) {
    check_pair(y, y_hat);
    if (y.size() < 2) throw DataError("explained_variance needs at least two points");
    const double var_y = population_variance(y);
    if (var_y == 0.0) {
        warn("explained_variance: truth series is constant, reporting 0");
        return 0.0;
    }
    std::vector<double> residual(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - y_hat[i];
    return 1.0 - population_variance(residual) / var_y;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["model"] = model;
    j["data"] = data_sources;
    j["mse"] = mse;
    j["mae"] = mae;
    j["explained_variance"] = explained_var;
    j["n_lag"] = n_lag;
    j["n_look_ahead"] = n_look_ahead;
    j["n"] = n;
    nlohmann::json ph = nlohmann::json::array();
    for (const auto& h : per_horizon) {
        ph.push_back({{"horizon", h.horizon}, {"mse", h.mse}, {"mae", h.mae}});
    }
    j["per_horizon"] = std::move(ph);
    return j;
}

EvalReport evaluate(const Forecaster& model, const TimeSeriesFrame& test_frame) {
    const WindowSpec& spec = model.window();
    const TimeSeriesFrame scaled = model.scaler().apply(test_frame);
    WindowedDataset windows = make_windows(scaled, spec);
    WindowedDataset truth = make_windows(test_frame, spec);
    const std::size_t n_samples = windows.sample_count();

    std::vector<double> y_all, yhat_all;
    std::vector<std::vector<double>> y_h(spec.tau_max), yhat_h(spec.tau_max);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const ForecastResult res = model.forecast(windows.sample_input(k));
        const std::size_t median = res.median_index();
        for (std::size_t j = 0; j < spec.tau_max; ++j) {
            const double truth_v = truth.label(k, j);
            const double pred_v = res.values[j][median];
            y_all.push_back(truth_v);
            yhat_all.push_back(pred_v);
            y_h[j].push_back(truth_v);
            yhat_h[j].push_back(pred_v);
        }
    }

    EvalReport report;
    report.model = kind_name(model.kind());
    report.data_sources = model.observed_columns().empty() ? "ASPM" : "ASPM&SWIM";
    report.mse = compute_mse(y_all, yhat_all);
    report.mae = compute_mae(y_all, yhat_all);
    report.explained_var = explained_variance(y_all, yhat_all);
    report.n_lag = spec.p;
    report.n_look_ahead = spec.tau_max;
    report.n = y_all.size();
    for (std::size_t j = 0; j < spec.tau_max; ++j) {
        report.per_horizon.push_back(
            {j + 1, compute_mse(y_h[j], yhat_h[j]), compute_mae(y_h[j], yhat_h[j])});
    }
    return report;
}

ComparisonTable compare_models(std::vector<EvalReport> reports) {
    if (reports.size() < 2) throw UsageError("compare_models needs at least two reports");
    double best = reports[0].mse;
    for (const auto& r : reports) best = std::min(best, r.mse);
    ComparisonTable table;
    for (auto& r : reports) {
        ComparisonRow row;
        row.mse_comparison = best == 0.0 ? 0.0 : (best - r.mse) / best;
        row.report = std::move(r);
        table.rows.push_back(std::move(row));
    }
    return table;
}

nlohmann::json ComparisonTable::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json j = row.report.to_json();
        j["mse_comparison"] = row.mse_comparison;
        j["mse_comparison_pct"] =
            std::to_string(std::lround(row.mse_comparison * 100.0)) + "%";
        rows_json.push_back(std::move(j));
    }
    return nlohmann::json{{"rows", std::move(rows_json)}};
}

std::string ComparisonTable::to_text() const {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"data", "model", "mse", "mae", "explained_variance", "n_lag", "n_look_ahead",
                     "mse_comparison"});
    for (const auto& row : rows) {
        const auto& r = row.report;
        cells.push_back({r.data_sources, display_name(r.model), fmt(r.mse, 2), fmt(r.mae, 2),
                         fmt(r.explained_var, 2), std::to_string(r.n_lag),
                         std::to_string(r.n_look_ahead),
                         std::to_string(std::lround(row.mse_comparison * 100.0)) + "%"});
    }
    std::vector<std::size_t> width(cells[0].size(), 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out.append(width[c] - row[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

AggregatedSeries aggregate(const std::vector<std::int64_t>& bin_start,
                           const std::vector<double>& y_true, const std::vector<double>& y_pred,
                           AggregationLevel level) {
    if (bin_start.empty() || bin_start.size() != y_true.size() ||
        bin_start.size() != y_pred.size()) {
        throw DataError("aggregate: inputs empty or lengths disagree");
    }
    const std::int64_t period = level == AggregationLevel::hour ? 3600 : 86400;
    const std::size_t bins_per_period = static_cast<std::size_t>(period / kBinSeconds);

    AggregatedSeries out;
    std::size_t i = 0;
    while (i < bin_start.size()) {
        if (bin_start[i] % period != 0) {
            ++i;  // partial leading period
            continue;
        }
        if (i + bins_per_period > bin_start.size()) break;  // partial trailing period
        bool contiguous = true;
        double sum_true = 0.0, sum_pred = 0.0;
        for (std::size_t k = 0; k < bins_per_period; ++k) {
            if (bin_start[i + k] != bin_start[i] + static_cast<std::int64_t>(k) * kBinSeconds) {
                contiguous = false;
                break;
            }
            sum_true += y_true[i + k];
            sum_pred += y_pred[i + k];
        }
        if (!contiguous) {
            ++i;
            continue;
        }
        out.period_start.push_back(bin_start[i]);
        out.y_true.push_back(sum_true);
        out.y_pred.push_back(sum_pred);
        i += bins_per_period;
    }
    return out;
}

RollingForecastTrace rolling_forecast(const Forecaster& model, const TimeSeriesFrame& frame,
                                      std::int64_t start, std::int64_t end) {
    if (!quarter_aligned(start) || !quarter_aligned(end) || end <= start) {
        throw DataError("rolling window [start, end) must be quarter-aligned and non-empty");
    }
    const WindowSpec& spec = model.window();
    const std::int64_t need_front =
        start - static_cast<std::int64_t>(spec.p) * kBinSeconds;
    const std::int64_t need_back =
        end - kBinSeconds + static_cast<std::int64_t>(spec.tau_max - 1) * kBinSeconds;
    if (frame.size() == 0 || need_front < frame.bin_start.front() ||
        need_back > frame.bin_start.back()) {
        throw DataError("frame does not cover the rolling window plus lags and look-ahead");
    }

    const TimeSeriesFrame scaled = model.scaler().apply(frame);
    WindowedDataset windows = make_windows(scaled, spec);

    RollingForecastTrace trace;
    for (std::int64_t issued = start; issued < end; issued += kBinSeconds) {
        // window whose first label bin is `issued`
        const std::size_t first_past = scaled.index_of_bin(
            issued - static_cast<std::int64_t>(spec.p) * kBinSeconds);
        RollingEntry entry;
        entry.issued_at = issued;
        entry.result = model.forecast(windows.sample_input(first_past));
        trace.entries.push_back(std::move(entry));
    }
    return trace;
}

std::vector<double> rolling_horizon_mae(const RollingForecastTrace& trace,
                                        const TimeSeriesFrame& truth) {
    if (trace.entries.empty()) throw DataError("rolling trace is empty");
    const std::size_t tau = trace.entries.front().result.values.size();
    std::vector<double> acc(tau, 0.0);
    std::vector<std::size_t> count(tau, 0);
    for (const auto& entry : trace.entries) {
        const std::size_t median = entry.result.median_index();
        for (std::size_t j = 0; j < tau; ++j) {
            const std::size_t idx = truth.index_of_bin(entry.result.horizon_times[j]);
            acc[j] += std::fabs(truth.y[idx] - entry.result.values[j][median]);
            ++count[j];
        }
    }
    for (std::size_t j = 0; j < tau; ++j) acc[j] /= static_cast<double>(count[j]);
    return acc;
}

std::vector<double> average_distributions(
    const std::vector<std::vector<std::vector<double>>>& mats) {
    if (mats.empty() || mats.front().empty()) throw DataError("no selection weights to average");
    const std::size_t vars = mats.front().front().size();
    std::vector<double> mean(vars, 0.0);
    std::size_t rows = 0;
    for (const auto& mat : mats) {
        for (const auto& row : mat) {
            if (row.size() != vars) throw DataError("selection weight rows disagree in width");
            for (std::size_t v = 0; v < vars; ++v) mean[v] += row[v];
            ++rows;
        }
    }
    for (double& v : mean) v /= static_cast<double>(rows);
    return mean;
}

namespace {

struct TftTestPass {
    std::vector<std::vector<std::vector<double>>> past, future, attention;
    std::vector<std::string> past_names, future_names;
};

TftTestPass run_tft_over(const Forecaster& model, const WindowedDataset& test_data) {
    TftTestPass pass;
    for (std::size_t k = 0; k < test_data.sample_count(); ++k) {
        TftExplanation ex = tft_explain(model, test_data.sample_input(k));
        if (k == 0) {
            pass.past_names = ex.past_variables;
            pass.future_names = ex.future_variables;
        }
        pass.past.push_back(std::move(ex.past_weights));
        pass.future.push_back(std::move(ex.future_weights));
        pass.attention.push_back(std::move(ex.attention));
    }
    return pass;
}

}  // namespace

VariableImportanceReport variable_importance(const Forecaster& tft_model,
                                             const WindowedDataset& test_data) {
    TftTestPass pass = run_tft_over(tft_model, test_data);
    VariableImportanceReport report;
    report.past_variables = pass.past_names;
    report.past_importance = average_distributions(pass.past);
    report.future_variables = pass.future_names;
    report.future_importance = average_distributions(pass.future);
    return report;
}

nlohmann::json VariableImportanceReport::to_json() const {
    nlohmann::json past, future;
    for (std::size_t v = 0; v < past_variables.size(); ++v) {
        past[past_variables[v]] = past_importance[v];
    }
    for (std::size_t v = 0; v < future_variables.size(); ++v) {
        future[future_variables[v]] = future_importance[v];
    }
    return nlohmann::json{{"past", std::move(past)}, {"future", std::move(future)}};
}

AttentionProfile attention_by_lag(const Forecaster& tft_model, const WindowedDataset& test_data) {
    TftTestPass pass = run_tft_over(tft_model, test_data);
    const std::size_t p = test_data.spec().p;
    const std::size_t tau = test_data.spec().tau_max;
    const std::size_t L = p + tau;

    AttentionProfile profile;
    profile.relative_index.resize(L);
    profile.mean_score.assign(L, 0.0);
    for (std::size_t a = 0; a < L; ++a) {
        profile.relative_index[a] = static_cast<long>(a) - static_cast<long>(p);
    }
    std::size_t rows = 0;
    for (const auto& mat : pass.attention) {
        for (const auto& row : mat) {
            for (std::size_t a = 0; a < L; ++a) profile.mean_score[a] += row[a];
            ++rows;
        }
    }
    for (double& v : profile.mean_score) v /= static_cast<double>(rows);
    return profile;
}

nlohmann::json AttentionProfile::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < relative_index.size(); ++i) {
        rows.push_back({{"time_index", relative_index[i]}, {"mean_score", mean_score[i]}});
    }
    return nlohmann::json{{"profile", std::move(rows)}};
}

PlotSeries plot_series(const Forecaster& model, const TimeSeriesFrame& test_frame) {
    const WindowSpec& spec = model.window();
    const TimeSeriesFrame scaled = model.scaler().apply(test_frame);
    WindowedDataset windows = make_windows(scaled, spec);

    PlotSeries series;
    series.has_quantiles = model.quantile_levels().size() > 1;
    for (std::size_t k = 0; k < windows.sample_count(); ++k) {
        const ForecastResult res = model.forecast(windows.sample_input(k));
        const std::size_t median = res.median_index();
        const std::size_t bin = k + spec.p;  // horizon-1 target bin
        series.bin_start.push_back(test_frame.bin_start[bin]);
        series.y_true.push_back(test_frame.y[bin]);
        series.y_pred.push_back(res.values[0][median]);
        if (series.has_quantiles) {
            series.q25.push_back(res.values[0].front());
            series.q75.push_back(res.values[0].back());
        }
    }
    return series;
}

void write_plot_csv(const PlotSeries& series, const std::string& path,
                    const std::string& config_hash) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    char buf[64];
    os << "# config_hash=" << config_hash << '\n';
    os << (series.has_quantiles ? "bin_start,y_true,y_pred,q25,q75\n" : "bin_start,y_true,y_pred\n");
    for (std::size_t i = 0; i < series.bin_start.size(); ++i) {
        os << format_utc(series.bin_start[i]);
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", series.y_true[i], series.y_pred[i]);
        os << buf;
        if (series.has_quantiles) {
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", series.q25[i], series.q75[i]);
            os << buf;
        }
        os << '\n';
    }
}

void write_rolling_csv(const RollingForecastTrace& trace, const TimeSeriesFrame& truth,
                       const std::string& path, const std::string& config_hash) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    const bool quantiles =
        !trace.entries.empty() && trace.entries.front().result.quantile_levels.size() > 1;
    os << "# config_hash=" << config_hash << '\n';
    os << (quantiles ? "issued_at,horizon,target_bin_start,y_true,y_pred,q25,q75\n"
                     : "issued_at,horizon,target_bin_start,y_true,y_pred\n");
    char buf[64];
    for (const auto& entry : trace.entries) {
        const std::size_t median = entry.result.median_index();
        for (std::size_t j = 0; j < entry.result.values.size(); ++j) {
            const std::int64_t target = entry.result.horizon_times[j];
            os << format_utc(entry.issued_at) << ',' << (j + 1) << ',' << format_utc(target);
            const double truth_v = truth.y[truth.index_of_bin(target)];
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", truth_v,
                          entry.result.values[j][median]);
            os << buf;
            if (quantiles) {
                std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", entry.result.values[j].front(),
                              entry.result.values[j].back());
                os << buf;
            }
            os << '\n';
        }
    }
}

}  // namespace tempofuse
