#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tempofuse/common.hpp"
#include "tempofuse/graph.hpp"

namespace tempofuse {

// Master copy of a model's trainable weights, addressed by index. Parameter
// sets are immutable during forward/backward of a graph; training owns them
// exclusively while updating.
class ParamStore {
public:
    std::size_t add(std::string name, Tensor value);
    // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from the seeded rng.
    std::size_t add_uniform(std::string name, std::vector<std::size_t> shape, std::size_t fan_in,
                            Rng& rng);
    std::size_t size() const { return values_.size(); }
    Tensor& value(std::size_t idx) { return values_[idx]; }
    const Tensor& value(std::size_t idx) const { return values_[idx]; }
    const std::string& name(std::size_t idx) const { return names_[idx]; }
    std::size_t index_of(const std::string& name) const;  // throws if absent

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

// Binds store parameters into one Graph on demand and owns per-pass state
// (training mode, dropout rng). One context per constructed graph.
class GraphContext {
public:
    GraphContext(Graph& graph, const ParamStore& store, bool training = false,
                 double dropout_rate = 0.0, Rng* dropout_rng = nullptr);

    Graph& graph() { return g_; }
    NodeId bind(std::size_t param_idx);
    NodeId constant(Tensor t) { return g_.input(std::move(t)); }
    bool training() const { return training_; }

    // Inverted dropout; identity when not training or rate is zero.
    NodeId dropout(NodeId x);

    // Gradient of the last backward() per store index; zeros when unbound.
    void collect_grads(std::vector<Tensor>& out) const;

private:
    Graph& g_;
    const ParamStore& store_;
    bool training_;
    double dropout_rate_;
    Rng* dropout_rng_;
    std::vector<std::int64_t> bound_;
};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

struct Dense {
    std::size_t w = 0;
    std::size_t b = 0;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    bool has_bias = true;

    static Dense create(ParamStore& store, const std::string& prefix, std::size_t in,
                        std::size_t out, Rng& rng, bool bias = true);
    // x [n x in] -> [n x out]
    NodeId apply(GraphContext& ctx, NodeId x) const;
};

struct EmbeddingTable {
    std::size_t weights = 0;
    std::size_t vocab = 0;
    std::size_t dim = 0;
    long index_base = 0;  // first valid raw code (e.g. 1 for quarter-of-hour)

    static EmbeddingTable create(ParamStore& store, const std::string& prefix, std::size_t vocab,
                                 std::size_t dim, Rng& rng, long index_base = 0);
    // Differentiable into the selected row only. Out-of-vocabulary codes are
    // an error, never clamped.
    NodeId lookup(GraphContext& ctx, long code) const;  // [1 x dim]
};

struct LstmCell {
    std::size_t w = 0;  // [(input+hidden) x 4*hidden], gate order i,f,o,g
    std::size_t b = 0;  // [4*hidden]
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;

    static LstmCell create(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                           std::size_t hidden_dim, Rng& rng);

    struct State {
        NodeId h;
        NodeId c;
    };
    State zero_state(GraphContext& ctx) const;
    // Standard recurrence: i,f,o = sigmoid, g = tanh, c' = f*c + i*g,
    // h' = o * tanh(c').
    State step(GraphContext& ctx, NodeId x, State prev) const;  // x [1 x input_dim]
};

// Luong "general" score: score_s = h_dec^T W h_enc_s.
struct LuongAttention {
    std::size_t w = 0;  // [hidden x hidden]
    std::size_t hidden_dim = 0;

    static LuongAttention create(ParamStore& store, const std::string& prefix,
                                 std::size_t hidden_dim, Rng& rng);
    struct Result {
        NodeId context;  // [1 x hidden]
        NodeId weights;  // [1 x p]
    };
    Result apply(GraphContext& ctx, NodeId decoder_h, NodeId encoder_states) const;
};

// layer_norm(a + GLU(fc_hidden(elu(fc_in(a) + ctx_proj(c))))) with learnable
// norm scale/bias; input and output dims are equal so the residual is always
// well formed.
struct GatedResidualBlock {
    Dense fc_in;
    Dense fc_hidden;
    Dense glu_gate;
    Dense glu_lin;
    Dense ctx_proj;  // no bias
    bool has_context = false;
    std::size_t norm_scale = 0;  // [dim], init 1
    std::size_t norm_bias = 0;   // [dim], init 0
    std::size_t dim = 0;

    static GatedResidualBlock create(ParamStore& store, const std::string& prefix, std::size_t dim,
                                     Rng& rng, std::size_t context_dim = 0);
    // a [n x dim] (+ context [1 x context_dim]) -> [n x dim]
    NodeId apply(GraphContext& ctx, NodeId a, std::optional<NodeId> context = {}) const;
};

struct VariableSelection {
    std::vector<GatedResidualBlock> transforms;  // one per variable
    Dense sel_hidden;  // V*dim -> dim
    Dense sel_out;     // dim -> V
    Dense sel_ctx;     // no bias
    bool has_context = false;
    std::size_t dim = 0;
    std::size_t num_vars = 0;

    static VariableSelection create(ParamStore& store, const std::string& prefix,
                                    std::size_t num_vars, std::size_t dim, Rng& rng,
                                    std::size_t context_dim = 0);
    struct Result {
        NodeId combined;  // [n x dim]
        NodeId weights;   // [n x V], exposed for interpretability
    };
    Result apply(GraphContext& ctx, const std::vector<NodeId>& variables,
                 std::optional<NodeId> context = {}) const;
};

// Multi-head attention with per-head query/key projections and one value
// projection shared across heads, so the head-averaged attention matrix is
// the one actually applied to the values.
struct InterpretableMultiHead {
    std::size_t heads = 0;
    std::vector<Dense> q_proj;  // dim -> dim/H, no bias
    std::vector<Dense> k_proj;
    Dense v_proj;    // dim -> dim, no bias, shared
    Dense out_proj;  // dim -> dim
    std::size_t dim = 0;

    static InterpretableMultiHead create(ParamStore& store, const std::string& prefix,
                                         std::size_t dim, std::size_t heads, Rng& rng);
    struct Result {
        NodeId output;     // [tau x dim]
        NodeId attention;  // [tau x L], head average; rows sum to 1, masked = 0
    };
    // keep: row-major [tau x L], 1 = may attend. A fully masked row throws.
    Result apply(GraphContext& ctx, NodeId queries, NodeId keys_values,
                 const std::vector<std::uint8_t>& keep) const;
};

struct QuantileHead {
    Dense proj;                  // dim -> Q, applied per horizon step
    std::vector<double> levels;  // strictly increasing, each in (0,1)

    static QuantileHead create(ParamStore& store, const std::string& prefix, std::size_t dim,
                               std::vector<double> levels, Rng& rng);
    // Raw affine outputs for training (pinball loss wants unsorted values).
    NodeId apply_raw(GraphContext& ctx, NodeId features) const;  // [tau x Q]
    // Non-crossing enforcement at inference: sorts each step's quantile
    // values ascending.
    static void sort_rows(Tensor& raw);
};

}  // namespace tempofuse
