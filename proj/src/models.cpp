#include "tempofuse/models.hpp"

#include <algorithm>
#include <cmath>

#include "tempofuse/linalg.hpp"
#include "tempofuse/models_impl.hpp"

namespace tempofuse {

const char* kind_name(ForecasterKind kind) {
    switch (kind) {
        case ForecasterKind::linear_regression: return "linear_regression";
        case ForecasterKind::autoregressive: return "autoregressive";
        case ForecasterKind::seq2seq: return "seq2seq";
        case ForecasterKind::seq2seq_attention: return "seq2seq_attention";
        case ForecasterKind::tft: return "tft";
    }
    return "?";
}

ForecasterKind kind_from_name(const std::string& name) {
    for (ForecasterKind k : kAllKinds) {
        if (name == kind_name(k)) return k;
    }
    throw UsageError("unknown model kind '" + name + "'");
}

std::size_t ForecastResult::median_index() const {
    std::size_t best = 0;
    double best_gap = 2.0;
    for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
        const double gap = std::fabs(quantile_levels[i] - 0.5);
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return best;
}

nlohmann::json ForecastResult::to_json() const {
    nlohmann::json j;
    j["issue_time"] = format_utc(issue_time);
    j["quantile_levels"] = quantile_levels;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < horizon_times.size(); ++t) {
        nlohmann::json row;
        row["horizon"] = t + 1;
        row["bin_start"] = format_utc(horizon_times[t]);
        row["values"] = values[t];
        rows.push_back(std::move(row));
    }
    j["horizons"] = std::move(rows);
    return j;
}

namespace detail {

nlohmann::json scaler_to_json(const ScalerParams& scaler) {
    nlohmann::json j;
    for (const auto& [name, mm] : scaler.columns()) {
        j[name] = {{"min", mm.min}, {"max", mm.max}};
    }
    return j;
}

ScalerParams scaler_from_json(const nlohmann::json& j) {
    std::map<std::string, ScalerParams::MinMax> columns;
    for (auto it = j.begin(); it != j.end(); ++it) {
        columns[it.key()] = {it.value().at("min").get<double>(),
                             it.value().at("max").get<double>()};
    }
    return ScalerParams::from_columns(std::move(columns));
}

ForecastResult assemble_forecast(std::int64_t issue_time, const std::vector<double>& levels,
                                 std::vector<std::vector<double>> scaled_rows,
                                 const ScalerParams& scaler) {
    ForecastResult res;
    res.issue_time = issue_time;
    res.quantile_levels = levels;
    res.values.reserve(scaled_rows.size());
    for (std::size_t t = 0; t < scaled_rows.size(); ++t) {
        res.horizon_times.push_back(issue_time + static_cast<std::int64_t>(t + 1) * kBinSeconds);
        std::vector<double>& row = scaled_rows[t];
        std::sort(row.begin(), row.end());  // non-crossing across quantile levels
        for (double& v : row) {
            v = std::max(0.0, scaler.invert_value("y", v));  // demand is a count
        }
        res.values.push_back(std::move(row));
    }
    return res;
}

void check_format_version(const nlohmann::json& j) {
    const int version = j.value("format_version", -1);
    if (version != kCheckpointVersion) {
        throw DataError("checkpoint format version " + std::to_string(version) +
                        " does not match expected " + std::to_string(kCheckpointVersion));
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear regression (direct multi-output, one ridge solve per horizon)
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kCalendarOneHot = 24 + 4 + 7 + 12;  // 47 per step

void push_calendar_onehot(std::vector<std::pair<std::size_t, double>>& row, std::size_t base,
                          const CalendarFields& cal) {
    row.emplace_back(base + static_cast<std::size_t>(cal.hour), 1.0);
    row.emplace_back(base + 24 + static_cast<std::size_t>(cal.qtr - 1), 1.0);
    row.emplace_back(base + 28 + static_cast<std::size_t>(cal.day_of_week - 1), 1.0);
    row.emplace_back(base + 35 + static_cast<std::size_t>(cal.month - 1), 1.0);
}

}  // namespace

std::size_t linear_feature_count(const WindowSpec& window, std::size_t observed_count) {
    return window.p * (1 + observed_count + kCalendarOneHot) + kCalendarOneHot + 1;
}

std::vector<std::pair<std::size_t, double>> linear_design_row(const SampleInput& sample,
                                                              std::size_t horizon,
                                                              std::size_t observed_count) {
    const std::size_t p = sample.past_y.size();
    std::vector<std::pair<std::size_t, double>> row;
    row.reserve(p * 6 + 6);
    for (std::size_t i = 0; i < p; ++i) row.emplace_back(i, sample.past_y[i]);
    for (std::size_t c = 0; c < observed_count; ++c) {
        for (std::size_t i = 0; i < p; ++i) {
            row.emplace_back(p + c * p + i, sample.past_observed[c][i]);
        }
    }
    const std::size_t cal_base = p * (1 + observed_count);
    for (std::size_t i = 0; i < p; ++i) {
        push_calendar_onehot(row, cal_base + i * kCalendarOneHot, sample.past_calendar[i]);
    }
    const std::size_t future_base = p * (1 + observed_count + kCalendarOneHot);
    push_calendar_onehot(row, future_base, sample.future_calendar[horizon]);
    row.emplace_back(future_base + kCalendarOneHot, 1.0);  // intercept
    return row;
}

class LinearRegressionForecaster final : public Forecaster {
public:
    LinearRegressionForecaster(WindowSpec window, ScalerParams scaler,
                               std::vector<std::string> observed)
        : window_(window), scaler_(std::move(scaler)), observed_(std::move(observed)) {
        window_.validate();
    }

    ForecasterKind kind() const override { return ForecasterKind::linear_regression; }
    const WindowSpec& window() const override { return window_; }
    const ScalerParams& scaler() const override { return scaler_; }
    const std::vector<std::string>& observed_columns() const override { return observed_; }
    std::vector<double> quantile_levels() const override { return {0.5}; }

    TrainReport fit(const WindowedDataset& data, const TrainConfig&) override {
        if (data.spec().p != window_.p || data.spec().tau_max != window_.tau_max) {
            throw DataError("dataset window does not match the model's window spec");
        }
        const std::size_t n = data.sample_count();
        const std::size_t dim = linear_feature_count(window_, observed_.size());
        coefficients_.assign(window_.tau_max, std::vector<double>(dim, 0.0));

        std::vector<SampleInput> inputs;
        inputs.reserve(n);
        for (std::size_t k = 0; k < n; ++k) inputs.push_back(data.sample_input(k));

        for (std::size_t j = 0; j < window_.tau_max; ++j) {
            std::vector<double> xtx(dim * dim, 0.0);
            std::vector<double> xty(dim, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                const auto row = linear_design_row(inputs[k], j, observed_.size());
                const double label = data.label(k, j);
                for (const auto& [ia, va] : row) {
                    xty[ia] += va * label;
                    for (const auto& [ib, vb] : row) xtx[ia * dim + ib] += va * vb;
                }
            }
            for (std::size_t d = 0; d + 1 < dim; ++d) xtx[d * dim + d] += kLinearRidge;
            coefficients_[j] = cholesky_solve(std::move(xtx), std::move(xty), dim);
        }
        fitted_ = true;
        return {};
    }

    ForecastResult forecast(const SampleInput& sample) const override {
        require_fitted();
        check_sample(sample, window_, observed_.size());
        std::vector<std::vector<double>> rows;
        rows.reserve(window_.tau_max);
        for (std::size_t j = 0; j < window_.tau_max; ++j) {
            const auto row = linear_design_row(sample, j, observed_.size());
            double acc = 0.0;
            for (const auto& [idx, v] : row) acc += coefficients_[j][idx] * v;
            rows.push_back({acc});
        }
        return detail::assemble_forecast(sample.issue_time, {0.5}, std::move(rows), scaler_);
    }

    nlohmann::json to_json() const override {
        require_fitted();
        nlohmann::json j;
        j["format_version"] = kCheckpointVersion;
        j["kind"] = kind_name(kind());
        j["window"] = {{"p", window_.p}, {"tau_max", window_.tau_max}};
        j["scaler"] = detail::scaler_to_json(scaler_);
        j["observed_columns"] = observed_;
        j["quantile_levels"] = quantile_levels();
        j["model"] = {{"ridge", kLinearRidge}, {"coefficients", coefficients_}};
        return j;
    }

    static std::unique_ptr<Forecaster> from_json(const nlohmann::json& j) {
        WindowSpec w{j.at("window").at("p").get<std::size_t>(),
                     j.at("window").at("tau_max").get<std::size_t>()};
        auto model = std::make_unique<LinearRegressionForecaster>(
            w, detail::scaler_from_json(j.at("scaler")),
            j.at("observed_columns").get<std::vector<std::string>>());
        model->coefficients_ = j.at("model").at("coefficients").get<std::vector<std::vector<double>>>();
        model->fitted_ = true;
        return model;
    }

    const std::vector<double>& coefficients(std::size_t horizon) const {
        require_fitted();
        return coefficients_[horizon];
    }

private:
    void require_fitted() const {
        if (!fitted_) throw DataError("linear model has not been fitted");
    }
    static void check_sample(const SampleInput& sample, const WindowSpec& w, std::size_t n_obs) {
        if (sample.past_y.size() != w.p || sample.future_calendar.size() != w.tau_max ||
            sample.past_calendar.size() != w.p || sample.past_observed.size() != n_obs) {
            throw DataError("forecast input blocks do not match the model's window spec");
        }
    }

    WindowSpec window_;
    ScalerParams scaler_;
    std::vector<std::string> observed_;
    std::vector<std::vector<double>> coefficients_;
    bool fitted_ = false;
};

const std::vector<double>& linear_coefficients(const Forecaster& model, std::size_t horizon) {
    return dynamic_cast<const LinearRegressionForecaster&>(model).coefficients(horizon);
}

// ---------------------------------------------------------------------------
// Autoregression
// ---------------------------------------------------------------------------

ARParams fit_ar(const std::vector<double>& series, std::size_t p) {
    if (p < 1) throw DataError("fit_ar: p must be >= 1");
    if (series.size() <= p) {
        throw DataError("fit_ar: series of " + std::to_string(series.size()) +
                        " points is shorter than p+1 = " + std::to_string(p + 1));
    }
    const bool constant = std::all_of(series.begin(), series.end(),
                                      [&](double v) { return v == series.front(); });
    if (constant) {
        // degenerate fixed point: c * (1 - sum(phi))^-1 = c
        return {series.front(), std::vector<double>(p, 0.0), 0.0};
    }

    const std::size_t m = series.size() - p;
    const std::size_t dim = p + 1;
    std::vector<double> a(m * dim, 0.0);
    std::vector<double> b(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t t = p + r;
        a[r * dim] = 1.0;
        for (std::size_t i = 1; i <= p; ++i) a[r * dim + i] = series[t - i];
        b[r] = series[t];
    }
    const std::vector<double> beta = qr_least_squares(a, b, m, dim);

    ARParams params;
    params.c = beta[0];
    params.phi.assign(beta.begin() + 1, beta.end());
    double ss = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t t = p + r;
        double pred = params.c;
        for (std::size_t i = 1; i <= p; ++i) pred += params.phi[i - 1] * series[t - i];
        ss += (series[t] - pred) * (series[t] - pred);
    }
    params.residual_variance = ss / static_cast<double>(m);
    return params;
}

class AutoRegressiveForecaster final : public Forecaster {
public:
    AutoRegressiveForecaster(WindowSpec window, ScalerParams scaler,
                             std::vector<std::string> observed)
        : window_(window), scaler_(std::move(scaler)), observed_(std::move(observed)) {
        window_.validate();
    }

    ForecasterKind kind() const override { return ForecasterKind::autoregressive; }
    const WindowSpec& window() const override { return window_; }
    const ScalerParams& scaler() const override { return scaler_; }
    const std::vector<std::string>& observed_columns() const override { return observed_; }
    std::vector<double> quantile_levels() const override { return {0.5}; }

    TrainReport fit(const WindowedDataset& data, const TrainConfig&) override {
        // only its own history is used; recover demand units from the scaled frame
        std::vector<double> series;
        series.reserve(data.frame().size());
        for (double v : data.frame().y) series.push_back(scaler_.invert_value("y", v));
        params_ = fit_ar(series, window_.p);
        fitted_ = true;
        return {};
    }

    void set_params(ARParams params) {
        if (params.phi.size() != window_.p) {
            throw DataError("AR coefficient count does not match the window's p");
        }
        params_ = std::move(params);
        fitted_ = true;
    }
    const ARParams& ar_params() const {
        require_fitted();
        return params_;
    }

    // Unclipped recursion (Eq.-exact); the reported forecast floors at zero.
    std::vector<double> recursive_path(std::vector<double> history) const {
        require_fitted();
        std::vector<double> out;
        out.reserve(window_.tau_max);
        for (std::size_t j = 0; j < window_.tau_max; ++j) {
            double pred = params_.c;
            for (std::size_t i = 1; i <= window_.p; ++i) {
                pred += params_.phi[i - 1] * history[history.size() - i];
            }
            history.push_back(pred);
            out.push_back(pred);
        }
        return out;
    }

    ForecastResult forecast(const SampleInput& sample) const override {
        require_fitted();
        if (sample.past_y.size() != window_.p) {
            throw DataError("forecast input blocks do not match the model's window spec");
        }
        std::vector<double> history;
        history.reserve(window_.p + window_.tau_max);
        for (double v : sample.past_y) history.push_back(scaler_.invert_value("y", v));
        const std::vector<double> path = recursive_path(std::move(history));
        std::vector<std::vector<double>> rows;
        rows.reserve(path.size());
        for (double v : path) rows.push_back({scaler_.apply_value("y", v)});
        return detail::assemble_forecast(sample.issue_time, {0.5}, std::move(rows), scaler_);
    }

    nlohmann::json to_json() const override {
        require_fitted();
        nlohmann::json j;
        j["format_version"] = kCheckpointVersion;
        j["kind"] = kind_name(kind());
        j["window"] = {{"p", window_.p}, {"tau_max", window_.tau_max}};
        j["scaler"] = detail::scaler_to_json(scaler_);
        j["observed_columns"] = observed_;
        j["quantile_levels"] = quantile_levels();
        j["model"] = {{"c", params_.c},
                      {"phi", params_.phi},
                      {"residual_variance", params_.residual_variance}};
        return j;
    }

    static std::unique_ptr<Forecaster> from_json(const nlohmann::json& j) {
        WindowSpec w{j.at("window").at("p").get<std::size_t>(),
                     j.at("window").at("tau_max").get<std::size_t>()};
        auto model = std::make_unique<AutoRegressiveForecaster>(
            w, detail::scaler_from_json(j.at("scaler")),
            j.at("observed_columns").get<std::vector<std::string>>());
        ARParams params;
        params.c = j.at("model").at("c").get<double>();
        params.phi = j.at("model").at("phi").get<std::vector<double>>();
        params.residual_variance = j.at("model").at("residual_variance").get<double>();
        model->set_params(std::move(params));
        return model;
    }

private:
    void require_fitted() const {
        if (!fitted_) throw DataError("AR model has not been fitted");
    }

    WindowSpec window_;
    ScalerParams scaler_;
    std::vector<std::string> observed_;
    ARParams params_;
    bool fitted_ = false;
};

const ARParams& ar_params(const Forecaster& model) {
    return dynamic_cast<const AutoRegressiveForecaster&>(model).ar_params();
}

std::vector<double> ar_recursive_path(const Forecaster& model, std::vector<double> history) {
    return dynamic_cast<const AutoRegressiveForecaster&>(model).recursive_path(std::move(history));
}

// ---------------------------------------------------------------------------
// Shared deep-forecaster plumbing
// ---------------------------------------------------------------------------

TrainReport DeepForecaster::fit(const WindowedDataset& data, const TrainConfig& cfg) {
    return train(*this, data, cfg);
}

ForecastResult DeepForecaster::forecast(const SampleInput& sample) const {
    return detail::assemble_forecast(sample.issue_time, quantile_levels(), predict_scaled(sample),
                                     scaler());
}

std::unique_ptr<Forecaster> make_forecaster(ForecasterKind kind, WindowSpec window,
                                            ScalerParams scaler,
                                            std::vector<std::string> observed_columns,
                                            const TrainConfig& cfg) {
    cfg.validate();
    switch (kind) {
        case ForecasterKind::linear_regression:
            return std::make_unique<LinearRegressionForecaster>(window, std::move(scaler),
                                                                std::move(observed_columns));
        case ForecasterKind::autoregressive:
            return std::make_unique<AutoRegressiveForecaster>(window, std::move(scaler),
                                                              std::move(observed_columns));
        case ForecasterKind::seq2seq:
            return make_seq2seq(false, window, std::move(scaler), std::move(observed_columns), cfg);
        case ForecasterKind::seq2seq_attention:
            return make_seq2seq(true, window, std::move(scaler), std::move(observed_columns), cfg);
        case ForecasterKind::tft:
            return make_tft(window, std::move(scaler), std::move(observed_columns), cfg);
    }
    throw UsageError("unknown model kind");
}

std::unique_ptr<Forecaster> forecaster_from_json(const nlohmann::json& j) {
    detail::check_format_version(j);
    const ForecasterKind kind = kind_from_name(j.at("kind").get<std::string>());
    switch (kind) {
        case ForecasterKind::linear_regression:
            return LinearRegressionForecaster::from_json(j);
        case ForecasterKind::autoregressive:
            return AutoRegressiveForecaster::from_json(j);
        case ForecasterKind::seq2seq:
        case ForecasterKind::seq2seq_attention:
        case ForecasterKind::tft:
            return deep_forecaster_from_json(j);
    }
    throw DataError("checkpoint holds an unknown model kind");
}

}  // namespace tempofuse
