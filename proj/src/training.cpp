#include "tempofuse/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tempofuse/models.hpp"

namespace tempofuse {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || batch_size < 1 || hidden_dim < 1 || embedding_dim < 1 ||
        attention_heads < 1 || gradient_clip_norm <= 0.0 || early_stop_patience < 1) {
        throw UsageError("train config fields must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw UsageError("dropout_rate must lie in [0,1)");
    }
    for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
        if (quantile_levels[i] <= 0.0 || quantile_levels[i] >= 1.0 ||
            (i > 0 && quantile_levels[i] <= quantile_levels[i - 1])) {
            throw UsageError("quantile levels must be strictly increasing within (0,1)");
        }
    }
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json j;
    j["learning_rate"] = learning_rate;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["hidden_dim"] = hidden_dim;
    j["embedding_dim"] = embedding_dim;
    j["attention_heads"] = attention_heads;
    j["dropout_rate"] = dropout_rate;
    j["quantile_levels"] = quantile_levels;
    j["gradient_clip_norm"] = gradient_clip_norm;
    j["early_stop_patience"] = early_stop_patience;
    j["static_dim"] = static_dim;
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.attention_heads = j.value("attention_heads", c.attention_heads);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    if (j.contains("quantile_levels")) {
        c.quantile_levels = j.at("quantile_levels").get<std::vector<double>>();
    }
    c.gradient_clip_norm = j.value("gradient_clip_norm", c.gradient_clip_norm);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.static_dim = j.value("static_dim", c.static_dim);
    c.validate();
    return c;
}

nlohmann::json TrainReport::to_json() const {
    // wall time is intentionally left out so repeated seeded runs serialize
    // byte-identically
    nlohmann::json j;
    j["train_loss"] = train_loss;
    j["val_loss"] = val_loss;
    j["stopped_epoch"] = stopped_epoch;
    if (!std::isnan(first_batch_loss)) j["first_batch_loss"] = first_batch_loss;
    return j;
}

NodeId mse_loss(Graph& g, NodeId pred, NodeId label) {
    NodeId diff = g.sub(pred, label);
    return g.mean(g.mul(diff, diff));
}

NodeId pinball_loss(Graph& g, NodeId pred, const std::vector<double>& labels,
                    const std::vector<double>& quantile_levels) {
    const Tensor& pv = g.value(pred);
    if (pv.rank() != 2 || pv.extent(0) != labels.size() ||
        pv.extent(1) != quantile_levels.size()) {
        throw DataError("pinball_loss: prediction shape " + pv.shape_str() +
                        " does not match " + std::to_string(labels.size()) + " labels x " +
                        std::to_string(quantile_levels.size()) + " levels");
    }
    std::vector<double> tilt(quantile_levels.size());
    for (std::size_t q = 0; q < quantile_levels.size(); ++q) {
        if (quantile_levels[q] <= 0.0 || quantile_levels[q] >= 1.0) {
            throw DataError("pinball_loss: quantile level outside (0,1)");
        }
        tilt[q] = quantile_levels[q] - 0.5;
    }
    Tensor expanded({labels.size(), quantile_levels.size()}, 0.0);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        for (std::size_t q = 0; q < quantile_levels.size(); ++q) expanded.at(t, q) = labels[t];
    }
    // max(q*d, (q-1)*d) == 0.5*|d| + (q-0.5)*d with d = y - yhat
    NodeId diff = g.sub(g.input(std::move(expanded)), pred);
    NodeId kernel = g.add(g.scale(g.abs(diff), 0.5), g.mul(diff, g.input(Tensor::vec(tilt))));
    return g.mean(kernel);
}

namespace {

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::size_t t = 0;
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_step(ParamStore& store, const std::vector<Tensor>& grads, AdamState& state,
               double learning_rate, double clip_norm) {
    double sq_norm = 0.0;
    for (const Tensor& gt : grads) {
        for (std::size_t i = 0; i < gt.size(); ++i) sq_norm += gt[i] * gt[i];
    }
    const double norm = std::sqrt(sq_norm);
    const double scale = norm > clip_norm ? clip_norm / norm : 1.0;

    ++state.t;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
    for (std::size_t pidx = 0; pidx < store.size(); ++pidx) {
        Tensor& w = store.value(pidx);
        Tensor& m = state.m[pidx];
        Tensor& vv = state.v[pidx];
        const bool has_grad = grads[pidx].size() > 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = has_grad ? grads[pidx][i] * scale : 0.0;
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
            vv[i] = kBeta2 * vv[i] + (1.0 - kBeta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = vv[i] / bc2;
            w[i] -= learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
        }
    }
}

double validation_mse(const DeepForecaster& model, const WindowedDataset& data,
                      const std::vector<std::size_t>& indices) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k : indices) {
        const auto rows = model.predict_scaled(data.sample_input(k));
        const std::size_t median = [&] {
            const auto levels = model.quantile_levels();
            std::size_t best = 0;
            double gap = 2.0;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (std::fabs(levels[i] - 0.5) < gap) {
                    gap = std::fabs(levels[i] - 0.5);
                    best = i;
                }
            }
            return best;
        }();
        for (std::size_t j = 0; j < rows.size(); ++j) {
            const double d = rows[j][median] - data.label(k, j);
            acc += d * d;
            ++n;
        }
    }
    return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

std::vector<Tensor> snapshot(const ParamStore& store) {
    std::vector<Tensor> values;
    values.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) values.push_back(store.value(i));
    return values;
}

void restore(ParamStore& store, const std::vector<Tensor>& values) {
    for (std::size_t i = 0; i < store.size(); ++i) store.value(i) = values[i];
}

}  // namespace

TrainReport train(DeepForecaster& model, const WindowedDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    TrainReport report;
    if (cfg.epochs == 0) return report;  // initialized model returned unchanged

    const auto start_time = std::chrono::steady_clock::now();
    const std::size_t n = data.sample_count();
    std::size_t n_val = n >= 10 ? n / 10 : (n >= 2 ? 1 : 0);
    const std::size_t n_train = n - n_val;

    std::vector<std::size_t> train_idx(n_train);
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::vector<std::size_t> val_idx(n_val);
    std::iota(val_idx.begin(), val_idx.end(), n_train);  // chronological tail

    Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    Rng dropout_rng(cfg.seed ^ 0x6a09e667f3bcc909ULL);

    ParamStore& store = model.params();
    AdamState adam;
    adam.m.reserve(store.size());
    adam.v.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        adam.m.emplace_back(store.value(i).shape(), 0.0);
        adam.v.emplace_back(store.value(i).shape(), 0.0);
    }

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_weights;
    std::size_t epochs_since_best = 0;

    std::vector<Tensor> grads;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < n_train; at += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, n_train - at);
            Graph g;
            GraphContext ctx(g, store, true, cfg.dropout_rate, &dropout_rng);
            NodeId batch_loss = 0;
            for (std::size_t b = 0; b < bsz; ++b) {
                NodeId sample_loss = model.build_sample_loss(ctx, data, train_idx[at + b]);
                batch_loss = b == 0 ? sample_loss : g.add(batch_loss, sample_loss);
            }
            batch_loss = g.scale(batch_loss, 1.0 / static_cast<double>(bsz));
            const double loss_value = g.value(batch_loss)[0];
            if (!std::isfinite(loss_value)) {
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " + std::to_string(batches));
            }
            if (epoch == 0 && batches == 0) report.first_batch_loss = loss_value;
            g.backward(batch_loss);
            ctx.collect_grads(grads);
            adam_step(store, grads, adam, cfg.learning_rate, cfg.gradient_clip_norm);
            epoch_loss += loss_value * static_cast<double>(bsz);
            ++batches;
        }
        report.train_loss.push_back(n_train == 0 ? 0.0
                                                 : epoch_loss / static_cast<double>(n_train));

        const double val = n_val > 0 ? validation_mse(model, data, val_idx)
                                     : report.train_loss.back();
        report.val_loss.push_back(val);
        report.stopped_epoch = epoch + 1;

        if (val < best_val) {
            best_val = val;
            best_weights = snapshot(store);
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.early_stop_patience) {
            break;
        }
    }
    if (!best_weights.empty()) restore(store, best_weights);

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return report;
}

void checkpoint_save(const Forecaster& model, const std::string& path,
                     const std::string& config_hash) {
    nlohmann::json j = model.to_json();
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    os << j.dump(1) << '\n';
}

std::unique_ptr<Forecaster> checkpoint_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path + " is not valid JSON: " + e.what());
    }
    try {
        return forecaster_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path + " is missing fields: " + e.what());
    }
}

}  // namespace tempofuse
