#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempofuse/models.hpp"

namespace tempofuse {

// Exact Eq.-style metrics over paired series.
double compute_mse(const std::vector<double>& y, const std::vector<double>& y_hat);
double compute_mae(const std::vector<double>& y, const std::vector<double>& y_hat);
// 1 - Var(y - y_hat)/Var(y), population variances; degenerate Var(y) = 0
// yields 0 with a warning.
double explained_variance(const std::vector<double>& y, const std::vector<double>& y_hat);

struct EvalReport {
    std::string model;
    std::string data_sources;  // "ASPM" or "ASPM&SWIM"
    double mse = 0.0;
    double mae = 0.0;
    double explained_var = 0.0;
    std::size_t n_lag = 0;
    std::size_t n_look_ahead = 0;
    std::size_t n = 0;  // scored (sample, horizon) pairs

    struct HorizonMetric {
        std::size_t horizon = 0;
        double mse = 0.0;
        double mae = 0.0;
    };
    std::vector<HorizonMetric> per_horizon;

    nlohmann::json to_json() const;
};

// Windows the raw test frame with the model's spec, forecasts every sample,
// and scores the median (point) predictions against the labels pooled over
// all horizons.
EvalReport evaluate(const Forecaster& model, const TimeSeriesFrame& test_frame);

struct ComparisonRow {
    EvalReport report;
    double mse_comparison = 0.0;  // (mse_best - mse_model) / mse_best, <= 0
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;

    nlohmann::json to_json() const;
    std::string to_text() const;  // aligned columns, one model per row
};

ComparisonTable compare_models(std::vector<EvalReport> reports);

// ---------------------------------------------------------------------------
// Aggregation and rolling updates
// ---------------------------------------------------------------------------

enum class AggregationLevel { hour, day };

struct AggregatedSeries {
    std::vector<std::int64_t> period_start;
    std::vector<double> y_true;
    std::vector<double> y_pred;
};

// Sums the 4 (hourly) or 96 (daily) quarter-hour values per aligned period,
// for truth and prediction alike; partial boundary periods are dropped.
AggregatedSeries aggregate(const std::vector<std::int64_t>& bin_start,
                           const std::vector<double>& y_true, const std::vector<double>& y_pred,
                           AggregationLevel level);

struct RollingEntry {
    std::int64_t issued_at = 0;  // clock of issuance = first predicted bin start
    ForecastResult result;
};

struct RollingForecastTrace {
    std::vector<RollingEntry> entries;
};

// Forecasts the next tau_max bins at every quarter-hour issue time in
// [start, end), always using the latest observed past block.
RollingForecastTrace rolling_forecast(const Forecaster& model, const TimeSeriesFrame& frame,
                                      std::int64_t start, std::int64_t end);

// Median-prediction absolute error per horizon step, pooled over the trace
// and scored against the frame's truth.
std::vector<double> rolling_horizon_mae(const RollingForecastTrace& trace,
                                        const TimeSeriesFrame& truth);

// ---------------------------------------------------------------------------
// Interpretability
// ---------------------------------------------------------------------------

struct VariableImportanceReport {
    std::vector<std::string> past_variables;
    std::vector<double> past_importance;  // mean selection weight, sums to 1
    std::vector<std::string> future_variables;
    std::vector<double> future_importance;

    nlohmann::json to_json() const;
};

// Columnwise mean of per-step selection-weight distributions; each row of
// every matrix must be a distribution, and the averaged result is one too.
std::vector<double> average_distributions(const std::vector<std::vector<std::vector<double>>>& mats);

VariableImportanceReport variable_importance(const Forecaster& tft_model,
                                             const WindowedDataset& test_data);

struct AttentionProfile {
    std::vector<long> relative_index;  // -p .. tau_max-1; -1 = bin before issue
    std::vector<double> mean_score;

    nlohmann::json to_json() const;
};

AttentionProfile attention_by_lag(const Forecaster& tft_model, const WindowedDataset& test_data);

// ---------------------------------------------------------------------------
// Plot/trace emission (CSV with a leading config-hash comment)
// ---------------------------------------------------------------------------

struct PlotSeries {
    std::vector<std::int64_t> bin_start;
    std::vector<double> y_true;
    std::vector<double> y_pred;            // median column
    std::vector<double> q25, q75;          // present for multi-quantile models
    bool has_quantiles = false;
};

// Horizon-1 predictions per test bin (the per-bin truth/prediction overlay).
PlotSeries plot_series(const Forecaster& model, const TimeSeriesFrame& test_frame);

void write_plot_csv(const PlotSeries& series, const std::string& path,
                    const std::string& config_hash);
void write_rolling_csv(const RollingForecastTrace& trace, const TimeSeriesFrame& truth,
                       const std::string& path, const std::string& config_hash);

}  // namespace tempofuse
