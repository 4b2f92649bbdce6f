#pragma once

#include <memory>

#include "tempofuse/models.hpp"

// Cross-translation-unit hooks for the concrete forecasters, plus typed
// accessors used by tests and the interpretability reports.

namespace tempofuse {

constexpr int kCheckpointVersion = 1;

std::unique_ptr<DeepForecaster> make_seq2seq(bool with_attention, WindowSpec window,
                                             ScalerParams scaler,
                                             std::vector<std::string> observed_columns,
                                             const TrainConfig& cfg);
std::unique_ptr<DeepForecaster> make_tft(WindowSpec window, ScalerParams scaler,
                                         std::vector<std::string> observed_columns,
                                         const TrainConfig& cfg);
std::unique_ptr<Forecaster> deep_forecaster_from_json(const nlohmann::json& j);

// Fitted coefficient vector of a linear-regression forecaster for one horizon.
const std::vector<double>& linear_coefficients(const Forecaster& model, std::size_t horizon);

const ARParams& ar_params(const Forecaster& model);
std::vector<double> ar_recursive_path(const Forecaster& model, std::vector<double> history);

// Per-decoder-step attention weights of the seq2seq_attention forecaster for
// one sample, shape [tau x p].
std::vector<std::vector<double>> seq2seq_attention_weights(const Forecaster& model,
                                                           const SampleInput& sample);

// Runs the seq2seq decoder with a caller-chosen previous-output sequence
// (prev_values[j] is consumed at decode step j).
std::vector<double> seq2seq_predict_teacher_forced(const Forecaster& model,
                                                   const SampleInput& sample,
                                                   const std::vector<double>& prev_values);

// TFT interpretability outputs for one sample.
struct TftExplanation {
    std::vector<std::vector<double>> past_weights;    // [p x V_past]
    std::vector<std::vector<double>> future_weights;  // [tau x V_future]
    std::vector<std::vector<double>> attention;       // [tau x (p + tau)]
    std::vector<std::string> past_variables;
    std::vector<std::string> future_variables;
    ForecastResult result;
};
TftExplanation tft_explain(const Forecaster& model, const SampleInput& sample);

// Gradient-check hook: builds one training-mode sample loss on a caller graph
// (no dropout) so tests can run finite differences over the model parameters.
NodeId deep_sample_loss_for_tests(const DeepForecaster& model, GraphContext& ctx,
                                  const WindowedDataset& data, std::size_t k);

// Static covariate pathway (empty for single-airport models): the TFT built
// with cfg.static_dim > 0 consumes this vector at every forecast.
void tft_set_static_inputs(Forecaster& model, std::vector<double> values);

}  // namespace tempofuse
