#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempofuse/frame.hpp"
#include "tempofuse/layers.hpp"
#include "tempofuse/training.hpp"

namespace tempofuse {

enum class ForecasterKind {
    linear_regression,
    autoregressive,
    seq2seq,
    seq2seq_attention,
    tft,
};

const char* kind_name(ForecasterKind kind);
ForecasterKind kind_from_name(const std::string& name);
inline constexpr ForecasterKind kAllKinds[] = {
    ForecasterKind::linear_regression, ForecasterKind::autoregressive, ForecasterKind::seq2seq,
    ForecasterKind::seq2seq_attention, ForecasterKind::tft};

// Per-horizon quantile predictions in demand units (inverse-scaled, floored
// at zero). Non-TFT models emit the single pseudo-quantile 0.5.
struct ForecastResult {
    std::int64_t issue_time = 0;                // bin start of the last observed bin
    std::vector<std::int64_t> horizon_times;    // issue_time + tau * 900 s
    std::vector<double> quantile_levels;
    std::vector<std::vector<double>> values;    // [tau][Q], non-decreasing across Q

    std::size_t median_index() const;           // column holding level 0.5
    nlohmann::json to_json() const;
};

// The five forecasters behind one interface: fit on a windowed dataset built
// from the scaled training frame, then map (past block, future-known block)
// to per-horizon predictions.
class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual ForecasterKind kind() const = 0;
    virtual const WindowSpec& window() const = 0;
    virtual const ScalerParams& scaler() const = 0;
    virtual const std::vector<std::string>& observed_columns() const = 0;
    virtual std::vector<double> quantile_levels() const = 0;

    virtual TrainReport fit(const WindowedDataset& data, const TrainConfig& cfg) = 0;
    virtual ForecastResult forecast(const SampleInput& sample) const = 0;

    virtual nlohmann::json to_json() const = 0;
};

// Gradient-trained forecasters additionally expose their parameter store and
// per-sample loss construction to the training loop.
class DeepForecaster : public Forecaster {
public:
    virtual ParamStore& params() = 0;
    virtual const ParamStore& params() const = 0;

    // Training-mode loss for one dataset window (teacher forcing where the
    // architecture decodes recursively at inference).
    virtual NodeId build_sample_loss(GraphContext& ctx, const WindowedDataset& data,
                                     std::size_t k) const = 0;

    // Scaled quantile outputs [tau][Q] in evaluation mode (no dropout,
    // recursive decoding).
    virtual std::vector<std::vector<double>> predict_scaled(const SampleInput& sample) const = 0;

    TrainReport fit(const WindowedDataset& data, const TrainConfig& cfg) override;
    ForecastResult forecast(const SampleInput& sample) const override;
};

std::unique_ptr<Forecaster> make_forecaster(ForecasterKind kind, WindowSpec window,
                                            ScalerParams scaler,
                                            std::vector<std::string> observed_columns,
                                            const TrainConfig& cfg);
std::unique_ptr<Forecaster> forecaster_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Closed-form baselines
// ---------------------------------------------------------------------------

// Eq.-style autoregression: y_t = c + phi_1 y_{t-1} + ... + phi_p y_{t-p} + e.
struct ARParams {
    double c = 0.0;
    std::vector<double> phi;
    double residual_variance = 0.0;
};

// Conditional least squares on the raw series. A constant series degenerates
// to (c = constant, phi = 0), the fixed point of the recurrence.
ARParams fit_ar(const std::vector<double>& series, std::size_t p);

class LinearRegressionForecaster;  // defined in models.cpp; tests reach the
                                   // design row through this declaration
class AutoRegressiveForecaster;

// Design-matrix layout shared with the normal-equations oracle in tests:
// [past y (p) | past observed (p per column) | past calendar one-hots (47 per
// step) | future calendar one-hot for the horizon (47) | intercept].
std::vector<std::pair<std::size_t, double>> linear_design_row(const SampleInput& sample,
                                                              std::size_t horizon,
                                                              std::size_t observed_count);
std::size_t linear_feature_count(const WindowSpec& window, std::size_t observed_count);
constexpr double kLinearRidge = 1e-6;

}  // namespace tempofuse
