#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempofuse/frame.hpp"
#include "tempofuse/graph.hpp"

namespace tempofuse {

class Forecaster;
class DeepForecaster;

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    std::size_t hidden_dim = 16;
    std::size_t embedding_dim = 4;
    std::size_t attention_heads = 4;
    double dropout_rate = 0.1;
    std::vector<double> quantile_levels = {0.25, 0.5, 0.75};
    double gradient_clip_norm = 1.0;
    std::size_t early_stop_patience = 5;
    std::size_t static_dim = 0;  // synthetic static covariate inputs

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainReport {
    std::vector<double> train_loss;  // one entry per completed epoch
    std::vector<double> val_loss;
    std::size_t stopped_epoch = 0;
    double wall_seconds = 0.0;  // not serialized: reports stay byte-stable
    double first_batch_loss = std::numeric_limits<double>::quiet_NaN();

    nlohmann::json to_json() const;
};

// Mean of squared differences over all elements.
NodeId mse_loss(Graph& g, NodeId pred, NodeId label);

// Mean over elements and levels of max(q*(y-yhat), (q-1)*(y-yhat)). pred is
// [n x Q]; labels hold the n target values, replicated across levels.
NodeId pinball_loss(Graph& g, NodeId pred, const std::vector<double>& labels,
                    const std::vector<double>& quantile_levels);

// Mini-batch Adam loop with global-norm clipping and early stopping on
// validation mse (chronological 90/10 split of the training windows). All
// randomness derives from cfg.seed. A non-finite loss aborts with a
// NumericError naming the epoch and batch.
TrainReport train(DeepForecaster& model, const WindowedDataset& data, const TrainConfig& cfg);

void checkpoint_save(const Forecaster& model, const std::string& path,
                     const std::string& config_hash = "");
std::unique_ptr<Forecaster> checkpoint_load(const std::string& path);

}  // namespace tempofuse
