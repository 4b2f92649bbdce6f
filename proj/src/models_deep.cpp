#include <algorithm>
#include <cmath>

#include "tempofuse/models_impl.hpp"

namespace tempofuse {

namespace {

// hour / quarter / day-of-week / month embedding group, shared by the deep
// models (vocabulary sizes from the quarter-hour data dictionary).
struct CalendarEmbeddings {
    EmbeddingTable hour, qtr, dow, month;

    static CalendarEmbeddings create(ParamStore& store, const std::string& prefix,
                                     std::size_t dim, Rng& rng) {
        return {EmbeddingTable::create(store, prefix + ".hour", 24, dim, rng, 0),
                EmbeddingTable::create(store, prefix + ".qtr", 4, dim, rng, 1),
                EmbeddingTable::create(store, prefix + ".dow", 7, dim, rng, 1),
                EmbeddingTable::create(store, prefix + ".month", 12, dim, rng, 1)};
    }

    std::vector<NodeId> lookup_all(GraphContext& ctx, const CalendarFields& cal) const {
        return {hour.lookup(ctx, cal.hour), qtr.lookup(ctx, cal.qtr),
                dow.lookup(ctx, cal.day_of_week), month.lookup(ctx, cal.month)};
    }
};

void check_sample_blocks(const SampleInput& sample, const WindowSpec& window,
                         std::size_t observed_count) {
    if (sample.past_y.size() != window.p || sample.past_calendar.size() != window.p ||
        sample.future_calendar.size() != window.tau_max ||
        sample.past_observed.size() != observed_count) {
        throw DataError("forecast input blocks do not match the model's window spec");
    }
    for (const auto& col : sample.past_observed) {
        if (col.size() != window.p) {
            throw DataError("forecast input blocks do not match the model's window spec");
        }
    }
}

nlohmann::json params_to_json(const ParamStore& store) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < store.size(); ++i) {
        nlohmann::json p;
        p["name"] = store.name(i);
        p["shape"] = store.value(i).shape();
        p["data"] = store.value(i).values();
        arr.push_back(std::move(p));
    }
    return arr;
}

void params_from_json(ParamStore& store, const nlohmann::json& arr) {
    if (!arr.is_array() || arr.size() != store.size()) {
        throw DataError("checkpoint parameter list does not match the architecture");
    }
    for (const auto& p : arr) {
        const std::size_t idx = store.index_of(p.at("name").get<std::string>());
        Tensor t(p.at("shape").get<std::vector<std::size_t>>(),
                 p.at("data").get<std::vector<double>>());
        if (t.shape() != store.value(idx).shape()) {
            throw DataError("checkpoint parameter " + store.name(idx) + " has the wrong shape");
        }
        store.value(idx) = std::move(t);
    }
}

// LayerNorm(residual + GLU(x)) with a learnable affine, the gated skip used
// around the TFT temporal blocks.
struct GateAddNorm {
    Dense gate, lin;
    std::size_t ln_scale = 0, ln_bias = 0;

    static GateAddNorm create(ParamStore& store, const std::string& prefix, std::size_t dim,
                              Rng& rng) {
        GateAddNorm gn;
        gn.gate = Dense::create(store, prefix + ".gate", dim, dim, rng);
        gn.lin = Dense::create(store, prefix + ".lin", dim, dim, rng);
        gn.ln_scale = store.add(prefix + ".ln_scale", Tensor({dim}, 1.0));
        gn.ln_bias = store.add(prefix + ".ln_bias", Tensor({dim}, 0.0));
        return gn;
    }

    NodeId apply(GraphContext& ctx, NodeId x, NodeId residual) const {
        Graph& g = ctx.graph();
        NodeId glu = g.mul(g.sigmoid(gate.apply(ctx, x)), lin.apply(ctx, x));
        NodeId normed = g.layer_norm(g.add(residual, glu));
        return g.add(g.mul(normed, ctx.bind(ln_scale)), ctx.bind(ln_bias));
    }
};

class DeepBase : public DeepForecaster {
public:
    DeepBase(ForecasterKind kind, WindowSpec window, ScalerParams scaler,
             std::vector<std::string> observed, const TrainConfig& cfg)
        : kind_(kind),
          window_(window),
          scaler_(std::move(scaler)),
          observed_(std::move(observed)),
          cfg_(cfg) {
        window_.validate();
    }

    ForecasterKind kind() const override { return kind_; }
    const WindowSpec& window() const override { return window_; }
    const ScalerParams& scaler() const override { return scaler_; }
    const std::vector<std::string>& observed_columns() const override { return observed_; }
    ParamStore& params() override { return store_; }
    const ParamStore& params() const override { return store_; }

    nlohmann::json to_json() const override {
        nlohmann::json j;
        j["format_version"] = kCheckpointVersion;
        j["kind"] = kind_name(kind_);
        j["window"] = {{"p", window_.p}, {"tau_max", window_.tau_max}};
        nlohmann::json scaler_json;
        for (const auto& [name, mm] : scaler_.columns()) {
            scaler_json[name] = {{"min", mm.min}, {"max", mm.max}};
        }
        j["scaler"] = std::move(scaler_json);
        j["observed_columns"] = observed_;
        j["quantile_levels"] = quantile_levels();
        j["vocabularies"] = {{"hour", 24}, {"qtr", 4}, {"day_of_week", 7}, {"month", 12}};
        nlohmann::json m;
        m["hidden_dim"] = cfg_.hidden_dim;
        m["embedding_dim"] = cfg_.embedding_dim;
        m["attention_heads"] = cfg_.attention_heads;
        m["dropout_rate"] = cfg_.dropout_rate;
        m["static_dim"] = cfg_.static_dim;
        extra_json(m);
        m["params"] = params_to_json(store_);
        j["model"] = std::move(m);
        return j;
    }

protected:
    virtual void extra_json(nlohmann::json&) const {}

    ForecasterKind kind_;
    WindowSpec window_;
    ScalerParams scaler_;
    std::vector<std::string> observed_;
    TrainConfig cfg_;
    ParamStore store_;
};

// ---------------------------------------------------------------------------
// seq2seq / seq2seq with attention
// ---------------------------------------------------------------------------

class Seq2SeqForecaster final : public DeepBase {
public:
    Seq2SeqForecaster(bool with_attention, WindowSpec window, ScalerParams scaler,
                      std::vector<std::string> observed, const TrainConfig& cfg)
        : DeepBase(with_attention ? ForecasterKind::seq2seq_attention : ForecasterKind::seq2seq,
                   window, std::move(scaler), std::move(observed), cfg),
          with_attention_(with_attention) {
        Rng rng(cfg_.seed);
        const std::size_t emb = cfg_.embedding_dim;
        const std::size_t hidden = cfg_.hidden_dim;
        embeddings_ = CalendarEmbeddings::create(store_, "emb", emb, rng);
        encoder_ = LstmCell::create(store_, "encoder", 1 + observed_.size() + 4 * emb, hidden, rng);
        decoder_ = LstmCell::create(store_, "decoder", 4 * emb + 1, hidden, rng);
        if (with_attention_) {
            attention_ = LuongAttention::create(store_, "attention", hidden, rng);
            head_ = Dense::create(store_, "head", 2 * hidden, 1, rng);
        } else {
            head_ = Dense::create(store_, "head", hidden, 1, rng);
        }
    }

    std::vector<double> quantile_levels() const override { return {0.5}; }

    NodeId build_sample_loss(GraphContext& ctx, const WindowedDataset& data,
                             std::size_t k) const override {
        Graph& g = ctx.graph();
        const SampleInput sample = data.sample_input(k);
        std::vector<double> teacher(window_.tau_max, 0.0);
        std::vector<double> labels(window_.tau_max, 0.0);
        for (std::size_t j = 0; j < window_.tau_max; ++j) {
            labels[j] = data.label(k, j);
            teacher[j] = j == 0 ? sample.past_y.back() : data.label(k, j - 1);
        }
        NodeId preds = decode(ctx, sample, &teacher);
        NodeId label_node = ctx.constant(Tensor({window_.tau_max, 1}, std::move(labels)));
        return mse_loss(g, preds, label_node);
    }

    std::vector<std::vector<double>> predict_scaled(const SampleInput& sample) const override {
        check_sample_blocks(sample, window_, observed_.size());
        Graph g;
        GraphContext ctx(g, store_);
        NodeId preds = decode(ctx, sample, nullptr);
        std::vector<std::vector<double>> out(window_.tau_max);
        for (std::size_t j = 0; j < window_.tau_max; ++j) out[j] = {g.value(preds).at(j, 0)};
        return out;
    }

    std::vector<std::vector<double>> attention_weights(const SampleInput& sample) const {
        if (!with_attention_) throw UsageError("model has no attention weights to report");
        check_sample_blocks(sample, window_, observed_.size());
        Graph g;
        GraphContext ctx(g, store_);
        std::vector<NodeId> weights;
        decode(ctx, sample, nullptr, &weights);
        std::vector<std::vector<double>> out;
        for (NodeId w : weights) {
            const Tensor& t = g.value(w);
            out.emplace_back(t.values());
        }
        return out;
    }

    // Predictions under a caller-chosen previous-output sequence; exposes the
    // decoder's dependence on the previous step for structural tests.
    std::vector<double> predict_teacher_forced(const SampleInput& sample,
                                               const std::vector<double>& prev_values) const {
        check_sample_blocks(sample, window_, observed_.size());
        if (prev_values.size() != window_.tau_max) {
            throw DataError("teacher-forced sequence must hold tau_max values");
        }
        Graph g;
        GraphContext ctx(g, store_);
        NodeId preds = decode(ctx, sample, &prev_values);
        std::vector<double> out(window_.tau_max, 0.0);
        for (std::size_t j = 0; j < window_.tau_max; ++j) out[j] = g.value(preds).at(j, 0);
        return out;
    }

private:
    // Encodes the past block and decodes tau_max steps. With `teacher` the
    // decoder consumes the given previous-step outputs; otherwise it feeds its
    // own predictions back (recursive inference).
    NodeId decode(GraphContext& ctx, const SampleInput& sample,
                  const std::vector<double>* teacher,
                  std::vector<NodeId>* attention_out = nullptr) const {
        Graph& g = ctx.graph();
        auto state = encoder_.zero_state(ctx);
        std::vector<NodeId> encoder_states;
        encoder_states.reserve(window_.p);
        for (std::size_t i = 0; i < window_.p; ++i) {
            std::vector<double> numeric{sample.past_y[i]};
            for (const auto& col : sample.past_observed) numeric.push_back(col[i]);
            std::vector<NodeId> parts{ctx.constant(Tensor::row(numeric))};
            for (NodeId e : embeddings_.lookup_all(ctx, sample.past_calendar[i])) {
                parts.push_back(e);
            }
            state = encoder_.step(ctx, g.concat(parts, 1), state);
            encoder_states.push_back(ctx.dropout(state.h));
        }
        NodeId encoder_stack = window_.p == 1 ? encoder_states[0]
                                              : g.concat(encoder_states, 0);  // [p x hidden]

        double prev = sample.past_y.back();
        std::vector<NodeId> outputs;
        outputs.reserve(window_.tau_max);
        for (std::size_t j = 0; j < window_.tau_max; ++j) {
            if (teacher != nullptr) prev = (*teacher)[j];
            std::vector<NodeId> parts = embeddings_.lookup_all(ctx, sample.future_calendar[j]);
            parts.push_back(ctx.constant(Tensor({1, 1}, prev)));
            state = decoder_.step(ctx, g.concat(parts, 1), state);
            NodeId features = ctx.dropout(state.h);
            if (with_attention_) {
                auto att = attention_.apply(ctx, features, encoder_stack);
                if (attention_out != nullptr) attention_out->push_back(att.weights);
                features = g.concat({features, att.context}, 1);
            }
            NodeId out = head_.apply(ctx, features);  // [1 x 1]
            outputs.push_back(out);
            if (teacher == nullptr) prev = g.value(out).at(0, 0);  // recursive decoding
        }
        return window_.tau_max == 1 ? outputs[0] : g.concat(outputs, 0);  // [tau x 1]
    }

    bool with_attention_;
    CalendarEmbeddings embeddings_;
    LstmCell encoder_, decoder_;
    LuongAttention attention_;
    Dense head_;
};

// ---------------------------------------------------------------------------
// Temporal fusion transformer
// ---------------------------------------------------------------------------

class TftForecaster final : public DeepBase {
public:
    TftForecaster(WindowSpec window, ScalerParams scaler, std::vector<std::string> observed,
                  const TrainConfig& cfg)
        : DeepBase(ForecasterKind::tft, window, std::move(scaler), std::move(observed), cfg) {
        if (cfg_.quantile_levels.empty()) {
            throw DataError("tft requires at least one quantile level");
        }
        Rng rng(cfg_.seed);
        const std::size_t d = cfg_.hidden_dim;
        embeddings_ = CalendarEmbeddings::create(store_, "emb", d, rng);
        y_proj_ = Dense::create(store_, "proj.y", 1, d, rng);
        for (std::size_t c = 0; c < observed_.size(); ++c) {
            obs_proj_.push_back(Dense::create(store_, "proj." + observed_[c], 1, d, rng));
        }

        const std::size_t ctx_dim = cfg_.static_dim > 0 ? d : 0;
        if (cfg_.static_dim > 0) {
            for (std::size_t s = 0; s < cfg_.static_dim; ++s) {
                static_proj_.push_back(
                    Dense::create(store_, "static.proj" + std::to_string(s), 1, d, rng));
            }
            vsn_static_ = VariableSelection::create(store_, "static.vsn", cfg_.static_dim, d, rng);
            ctx_selection_ = GatedResidualBlock::create(store_, "static.ctx_sel", d, rng);
            ctx_cell_ = GatedResidualBlock::create(store_, "static.ctx_cell", d, rng);
            ctx_hidden_ = GatedResidualBlock::create(store_, "static.ctx_hidden", d, rng);
            ctx_enrich_ = GatedResidualBlock::create(store_, "static.ctx_enrich", d, rng);
            static_values_.assign(cfg_.static_dim, 0.0);
        }

        vsn_past_ = VariableSelection::create(store_, "vsn_past", past_variable_count(), d, rng,
                                              ctx_dim);
        vsn_future_ = VariableSelection::create(store_, "vsn_future", 4, d, rng, ctx_dim);
        lstm_enc_ = LstmCell::create(store_, "lstm_enc", d, d, rng);
        lstm_dec_ = LstmCell::create(store_, "lstm_dec", d, d, rng);
        gate_lstm_ = GateAddNorm::create(store_, "gate_lstm", d, rng);
        grn_enrich_ = GatedResidualBlock::create(store_, "enrich", d, rng, ctx_dim);
        mha_ = InterpretableMultiHead::create(store_, "mha", d, cfg_.attention_heads, rng);
        gate_attn_ = GateAddNorm::create(store_, "gate_attn", d, rng);
        grn_ff_ = GatedResidualBlock::create(store_, "ff", d, rng);
        gate_final_ = GateAddNorm::create(store_, "gate_final", d, rng);
        head_ = QuantileHead::create(store_, "head", d, cfg_.quantile_levels, rng);
    }

    std::vector<double> quantile_levels() const override { return head_.levels; }

    std::size_t past_variable_count() const { return 1 + observed_.size() + 4; }

    std::vector<std::string> past_variable_names() const {
        std::vector<std::string> names{"y"};
        for (const auto& o : observed_) names.push_back(o);
        names.insert(names.end(), {"hour", "qtr", "day_of_week", "month"});
        return names;
    }
    static std::vector<std::string> future_variable_names() {
        return {"hour", "qtr", "day_of_week", "month"};
    }

    void set_static_inputs(std::vector<double> values) {
        if (values.size() != cfg_.static_dim) {
            throw DataError("static input count does not match the configured static_dim");
        }
        static_values_ = std::move(values);
    }

    NodeId build_sample_loss(GraphContext& ctx, const WindowedDataset& data,
                             std::size_t k) const override {
        const SampleInput sample = data.sample_input(k);
        Forward f = build_forward(ctx, sample);
        std::vector<double> labels(window_.tau_max, 0.0);
        for (std::size_t j = 0; j < window_.tau_max; ++j) labels[j] = data.label(k, j);
        return pinball_loss(ctx.graph(), f.quantiles_raw, labels, head_.levels);
    }

    std::vector<std::vector<double>> predict_scaled(const SampleInput& sample) const override {
        check_sample_blocks(sample, window_, observed_.size());
        Graph g;
        GraphContext ctx(g, store_);
        Forward f = build_forward(ctx, sample);
        const Tensor& raw = g.value(f.quantiles_raw);
        std::vector<std::vector<double>> out(window_.tau_max);
        for (std::size_t j = 0; j < window_.tau_max; ++j) {
            out[j].reserve(head_.levels.size());
            for (std::size_t q = 0; q < head_.levels.size(); ++q) out[j].push_back(raw.at(j, q));
        }
        return out;
    }

    TftExplanation explain(const SampleInput& sample) const {
        check_sample_blocks(sample, window_, observed_.size());
        Graph g;
        GraphContext ctx(g, store_);
        Forward f = build_forward(ctx, sample);
        auto to_rows = [&g](NodeId id) {
            const Tensor& t = g.value(id);
            std::vector<std::vector<double>> rows(t.extent(0));
            for (std::size_t r = 0; r < t.extent(0); ++r) {
                rows[r].assign(t.data() + r * t.extent(1), t.data() + (r + 1) * t.extent(1));
            }
            return rows;
        };
        TftExplanation ex;
        ex.past_weights = to_rows(f.past_weights);
        ex.future_weights = to_rows(f.future_weights);
        ex.attention = to_rows(f.attention);
        ex.past_variables = past_variable_names();
        ex.future_variables = future_variable_names();

        std::vector<std::vector<double>> rows(window_.tau_max);
        const Tensor& raw = g.value(f.quantiles_raw);
        for (std::size_t j = 0; j < window_.tau_max; ++j) {
            for (std::size_t q = 0; q < head_.levels.size(); ++q) rows[j].push_back(raw.at(j, q));
        }
        ex.result = forecast(sample);
        return ex;
    }

protected:
    void extra_json(nlohmann::json& m) const override {
        m["static_values"] = static_values_;
    }

public:
    void load_static_from_json(const nlohmann::json& m) {
        if (cfg_.static_dim > 0 && m.contains("static_values")) {
            set_static_inputs(m.at("static_values").get<std::vector<double>>());
        }
    }

private:
    struct Forward {
        NodeId quantiles_raw;   // [tau x Q]
        NodeId past_weights;    // [p x V_past]
        NodeId future_weights;  // [tau x 4]
        NodeId attention;       // [tau x (p + tau)]
    };

    Forward build_forward(GraphContext& ctx, const SampleInput& sample) const {
        Graph& g = ctx.graph();
        const std::size_t p = window_.p;
        const std::size_t tau = window_.tau_max;
        const std::size_t L = p + tau;

        // static covariate encoders (skipped entirely when the set is empty)
        std::optional<NodeId> c_sel, c_cell, c_hidden, c_enrich;
        if (cfg_.static_dim > 0) {
            std::vector<NodeId> statics;
            for (std::size_t s = 0; s < cfg_.static_dim; ++s) {
                statics.push_back(static_proj_[s].apply(
                    ctx, ctx.constant(Tensor({1, 1}, static_values_[s]))));
            }
            auto vs = vsn_static_.apply(ctx, statics);
            c_sel = ctx_selection_.apply(ctx, vs.combined);
            c_cell = ctx_cell_.apply(ctx, vs.combined);
            c_hidden = ctx_hidden_.apply(ctx, vs.combined);
            c_enrich = ctx_enrich_.apply(ctx, vs.combined);
        }

        // per-variable embeddings over the past block
        std::vector<NodeId> past_vars;
        {
            Tensor y_col({p, 1}, std::vector<double>(sample.past_y));
            past_vars.push_back(y_proj_.apply(ctx, ctx.constant(std::move(y_col))));
            for (std::size_t c = 0; c < observed_.size(); ++c) {
                Tensor col({p, 1}, std::vector<double>(sample.past_observed[c]));
                past_vars.push_back(obs_proj_[c].apply(ctx, ctx.constant(std::move(col))));
            }
        }
        past_vars.push_back(stack_calendar(ctx, sample.past_calendar, CalKey::hour));
        past_vars.push_back(stack_calendar(ctx, sample.past_calendar, CalKey::qtr));
        past_vars.push_back(stack_calendar(ctx, sample.past_calendar, CalKey::dow));
        past_vars.push_back(stack_calendar(ctx, sample.past_calendar, CalKey::month));

        std::vector<NodeId> future_vars{
            stack_calendar(ctx, sample.future_calendar, CalKey::hour),
            stack_calendar(ctx, sample.future_calendar, CalKey::qtr),
            stack_calendar(ctx, sample.future_calendar, CalKey::dow),
            stack_calendar(ctx, sample.future_calendar, CalKey::month)};

        auto past_sel = vsn_past_.apply(ctx, past_vars, c_sel);
        auto future_sel = vsn_future_.apply(ctx, future_vars, c_sel);

        // seq2seq layer for local processing
        LstmCell::State state = cfg_.static_dim > 0
                                    ? LstmCell::State{*c_hidden, *c_cell}
                                    : lstm_enc_.zero_state(ctx);
        std::vector<NodeId> lstm_rows;
        lstm_rows.reserve(L);
        for (std::size_t i = 0; i < p; ++i) {
            state = lstm_enc_.step(ctx, g.slice(past_sel.combined, 0, i, 1), state);
            lstm_rows.push_back(state.h);
        }
        for (std::size_t j = 0; j < tau; ++j) {
            state = lstm_dec_.step(ctx, g.slice(future_sel.combined, 0, j, 1), state);
            lstm_rows.push_back(state.h);
        }
        NodeId lstm_out = ctx.dropout(g.concat(lstm_rows, 0));  // [L x d]
        NodeId xi_all = g.concat({past_sel.combined, future_sel.combined}, 0);
        NodeId phi = gate_lstm_.apply(ctx, lstm_out, xi_all);

        // static enrichment, then causal attention over the whole horizon
        NodeId theta = grn_enrich_.apply(ctx, phi, c_enrich);
        NodeId queries = g.slice(theta, 0, p, tau);
        std::vector<std::uint8_t> keep(tau * L, 0);
        for (std::size_t j = 0; j < tau; ++j) {
            for (std::size_t a = 0; a <= p + j; ++a) keep[j * L + a] = 1;
        }
        auto att = mha_.apply(ctx, queries, theta, keep);
        NodeId delta = gate_attn_.apply(ctx, att.output, queries);
        NodeId psi = grn_ff_.apply(ctx, delta);
        NodeId final_features = gate_final_.apply(ctx, psi, g.slice(phi, 0, p, tau));

        Forward f;
        f.quantiles_raw = head_.apply_raw(ctx, final_features);
        f.past_weights = past_sel.weights;
        f.future_weights = future_sel.weights;
        f.attention = att.attention;
        return f;
    }

    enum class CalKey { hour, qtr, dow, month };

    NodeId stack_calendar(GraphContext& ctx, const std::vector<CalendarFields>& cal,
                          CalKey key) const {
        std::vector<NodeId> rows;
        rows.reserve(cal.size());
        for (const auto& c : cal) {
            switch (key) {
                case CalKey::hour: rows.push_back(embeddings_.hour.lookup(ctx, c.hour)); break;
                case CalKey::qtr: rows.push_back(embeddings_.qtr.lookup(ctx, c.qtr)); break;
                case CalKey::dow: rows.push_back(embeddings_.dow.lookup(ctx, c.day_of_week)); break;
                case CalKey::month: rows.push_back(embeddings_.month.lookup(ctx, c.month)); break;
            }
        }
        return rows.size() == 1 ? rows[0] : ctx.graph().concat(rows, 0);
    }

    CalendarEmbeddings embeddings_;
    Dense y_proj_;
    std::vector<Dense> obs_proj_;
    std::vector<Dense> static_proj_;
    VariableSelection vsn_static_;
    GatedResidualBlock ctx_selection_, ctx_cell_, ctx_hidden_, ctx_enrich_;
    VariableSelection vsn_past_, vsn_future_;
    LstmCell lstm_enc_, lstm_dec_;
    GateAddNorm gate_lstm_;
    GatedResidualBlock grn_enrich_;
    InterpretableMultiHead mha_;
    GateAddNorm gate_attn_;
    GatedResidualBlock grn_ff_;
    GateAddNorm gate_final_;
    QuantileHead head_;
    std::vector<double> static_values_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Factories, serialization hooks, typed accessors
// ---------------------------------------------------------------------------

std::unique_ptr<DeepForecaster> make_seq2seq(bool with_attention, WindowSpec window,
                                             ScalerParams scaler,
                                             std::vector<std::string> observed_columns,
                                             const TrainConfig& cfg) {
    return std::make_unique<Seq2SeqForecaster>(with_attention, window, std::move(scaler),
                                               std::move(observed_columns), cfg);
}

std::unique_ptr<DeepForecaster> make_tft(WindowSpec window, ScalerParams scaler,
                                         std::vector<std::string> observed_columns,
                                         const TrainConfig& cfg) {
    return std::make_unique<TftForecaster>(window, std::move(scaler),
                                           std::move(observed_columns), cfg);
}

std::unique_ptr<Forecaster> deep_forecaster_from_json(const nlohmann::json& j) {
    const ForecasterKind kind = kind_from_name(j.at("kind").get<std::string>());
    WindowSpec window{j.at("window").at("p").get<std::size_t>(),
                      j.at("window").at("tau_max").get<std::size_t>()};
    std::map<std::string, ScalerParams::MinMax> columns;
    for (auto it = j.at("scaler").begin(); it != j.at("scaler").end(); ++it) {
        columns[it.key()] = {it.value().at("min").get<double>(),
                             it.value().at("max").get<double>()};
    }
    ScalerParams scaler = ScalerParams::from_columns(std::move(columns));
    auto observed = j.at("observed_columns").get<std::vector<std::string>>();

    const nlohmann::json& m = j.at("model");
    TrainConfig cfg;
    cfg.hidden_dim = m.at("hidden_dim").get<std::size_t>();
    cfg.embedding_dim = m.at("embedding_dim").get<std::size_t>();
    cfg.attention_heads = m.at("attention_heads").get<std::size_t>();
    cfg.dropout_rate = m.at("dropout_rate").get<double>();
    cfg.static_dim = m.at("static_dim").get<std::size_t>();
    cfg.quantile_levels = j.at("quantile_levels").get<std::vector<double>>();
    cfg.seed = 0;  // initial weights are overwritten below

    std::unique_ptr<DeepForecaster> model;
    if (kind == ForecasterKind::tft) {
        model = make_tft(window, std::move(scaler), std::move(observed), cfg);
        static_cast<TftForecaster&>(*model).load_static_from_json(m);
    } else {
        model = make_seq2seq(kind == ForecasterKind::seq2seq_attention, window, std::move(scaler),
                             std::move(observed), cfg);
    }
    params_from_json(model->params(), m.at("params"));
    return model;
}

std::vector<std::vector<double>> seq2seq_attention_weights(const Forecaster& model,
                                                           const SampleInput& sample) {
    return dynamic_cast<const Seq2SeqForecaster&>(model).attention_weights(sample);
}

std::vector<double> seq2seq_predict_teacher_forced(const Forecaster& model,
                                                   const SampleInput& sample,
                                                   const std::vector<double>& prev_values) {
    return dynamic_cast<const Seq2SeqForecaster&>(model).predict_teacher_forced(sample,
                                                                                prev_values);
}

TftExplanation tft_explain(const Forecaster& model, const SampleInput& sample) {
    const auto* tft = dynamic_cast<const TftForecaster*>(&model);
    if (tft == nullptr) {
        throw UsageError("interpretability reports require a tft model, got " +
                         std::string(kind_name(model.kind())));
    }
    return tft->explain(sample);
}

void tft_set_static_inputs(Forecaster& model, std::vector<double> values) {
    dynamic_cast<TftForecaster&>(model).set_static_inputs(std::move(values));
}

NodeId deep_sample_loss_for_tests(const DeepForecaster& model, GraphContext& ctx,
                                  const WindowedDataset& data, std::size_t k) {
    return model.build_sample_loss(ctx, data, k);
}

}  // namespace tempofuse
