#include "tempofuse/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tempofuse {

std::size_t ParamStore::add(std::string name, Tensor value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
}

std::size_t ParamStore::add_uniform(std::string name, std::vector<std::size_t> shape,
                                    std::size_t fan_in, Rng& rng) {
    Tensor t(std::move(shape), 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return add(std::move(name), std::move(t));
}

std::size_t ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    throw std::invalid_argument("param store: no parameter named " + name);
}

GraphContext::GraphContext(Graph& graph, const ParamStore& store, bool training,
                           double dropout_rate, Rng* dropout_rng)
    : g_(graph),
      store_(store),
      training_(training),
      dropout_rate_(dropout_rate),
      dropout_rng_(dropout_rng),
      bound_(store.size(), -1) {}

NodeId GraphContext::bind(std::size_t param_idx) {
    if (param_idx >= bound_.size()) throw std::logic_error("bind: parameter index out of range");
    if (bound_[param_idx] < 0) {
        bound_[param_idx] = static_cast<std::int64_t>(g_.parameter(store_.value(param_idx)));
    }
    return static_cast<NodeId>(bound_[param_idx]);
}

NodeId GraphContext::dropout(NodeId x) {
    if (!training_ || dropout_rate_ <= 0.0 || dropout_rng_ == nullptr) return x;
    const Tensor& v = g_.value(x);
    Tensor mask(v.shape(), 0.0);
    const double keep = 1.0 - dropout_rate_;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = dropout_rng_->bernoulli(keep) ? 1.0 / keep : 0.0;
    }
    return g_.mul(x, g_.input(std::move(mask)));
}

void GraphContext::collect_grads(std::vector<Tensor>& out) const {
    out.assign(store_.size(), Tensor{});
    for (std::size_t i = 0; i < bound_.size(); ++i) {
        if (bound_[i] >= 0) out[i] = g_.grad(static_cast<NodeId>(bound_[i]));
    }
}

// ---------------------------------------------------------------------------

Dense Dense::create(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                    Rng& rng, bool bias) {
    Dense d;
    d.in_dim = in;
    d.out_dim = out;
    d.has_bias = bias;
    d.w = store.add_uniform(prefix + ".w", {in, out}, in, rng);
    if (bias) d.b = store.add_uniform(prefix + ".b", {out}, in, rng);
    return d;
}

NodeId Dense::apply(GraphContext& ctx, NodeId x) const {
    Graph& g = ctx.graph();
    NodeId y = g.matmul(x, ctx.bind(w));
    if (has_bias) y = g.add(y, ctx.bind(b));
    return y;
}

EmbeddingTable EmbeddingTable::create(ParamStore& store, const std::string& prefix,
                                      std::size_t vocab, std::size_t dim, Rng& rng,
                                      long index_base) {
    EmbeddingTable e;
    e.vocab = vocab;
    e.dim = dim;
    e.index_base = index_base;
    e.weights = store.add_uniform(prefix + ".emb", {vocab, dim}, dim, rng);
    return e;
}

NodeId EmbeddingTable::lookup(GraphContext& ctx, long code) const {
    const long idx = code - index_base;
    if (idx < 0 || static_cast<std::size_t>(idx) >= vocab) {
        throw std::invalid_argument("embedding: code " + std::to_string(code) +
                                    " outside vocabulary [" + std::to_string(index_base) + "," +
                                    std::to_string(index_base + static_cast<long>(vocab)) + ")");
    }
    return ctx.graph().select_row(ctx.bind(weights), static_cast<std::size_t>(idx));
}

LstmCell LstmCell::create(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                          std::size_t hidden_dim, Rng& rng) {
    LstmCell cell;
    cell.input_dim = input_dim;
    cell.hidden_dim = hidden_dim;
    cell.w = store.add_uniform(prefix + ".w", {input_dim + hidden_dim, 4 * hidden_dim},
                               input_dim + hidden_dim, rng);
    cell.b = store.add_uniform(prefix + ".b", {4 * hidden_dim}, input_dim + hidden_dim, rng);
    return cell;
}

LstmCell::State LstmCell::zero_state(GraphContext& ctx) const {
    NodeId h = ctx.constant(Tensor({1, hidden_dim}, 0.0));
    NodeId c = ctx.constant(Tensor({1, hidden_dim}, 0.0));
    return {h, c};
}

LstmCell::State LstmCell::step(GraphContext& ctx, NodeId x, State prev) const {
    Graph& g = ctx.graph();
    const Tensor& xv = g.value(x);
    if (xv.rank() != 2 || xv.extent(0) != 1 || xv.extent(1) != input_dim) {
        throw std::invalid_argument("lstm_step: input shape " + xv.shape_str() +
                                    " does not match input_dim " + std::to_string(input_dim));
    }
    NodeId joint = g.concat({x, prev.h}, 1);
    NodeId gates = g.add(g.matmul(joint, ctx.bind(w)), ctx.bind(b));
    const std::size_t h = hidden_dim;
    NodeId i_gate = g.sigmoid(g.slice(gates, 1, 0, h));
    NodeId f_gate = g.sigmoid(g.slice(gates, 1, h, h));
    NodeId o_gate = g.sigmoid(g.slice(gates, 1, 2 * h, h));
    NodeId cand = g.tanh(g.slice(gates, 1, 3 * h, h));
    NodeId c_next = g.add(g.mul(f_gate, prev.c), g.mul(i_gate, cand));
    NodeId h_next = g.mul(o_gate, g.tanh(c_next));
    return {h_next, c_next};
}

LuongAttention LuongAttention::create(ParamStore& store, const std::string& prefix,
                                      std::size_t hidden_dim, Rng& rng) {
    LuongAttention att;
    att.hidden_dim = hidden_dim;
    att.w = store.add_uniform(prefix + ".w", {hidden_dim, hidden_dim}, hidden_dim, rng);
    return att;
}

LuongAttention::Result LuongAttention::apply(GraphContext& ctx, NodeId decoder_h,
                                             NodeId encoder_states) const {
    Graph& g = ctx.graph();
    const Tensor& enc = g.value(encoder_states);
    if (enc.rank() != 2 || enc.extent(1) != hidden_dim) {
        throw std::invalid_argument("luong_attention: encoder states " + enc.shape_str() +
                                    " do not match hidden_dim " + std::to_string(hidden_dim));
    }
    NodeId query = g.matmul(decoder_h, ctx.bind(w));          // [1 x h]
    NodeId scores = g.matmul_bt(query, encoder_states);       // [1 x p]
    NodeId weights = g.softmax(scores, 1);
    NodeId context = g.matmul(weights, encoder_states);       // [1 x h]
    return {context, weights};
}

GatedResidualBlock GatedResidualBlock::create(ParamStore& store, const std::string& prefix,
                                              std::size_t dim, Rng& rng, std::size_t context_dim) {
    GatedResidualBlock blk;
    blk.dim = dim;
    blk.fc_in = Dense::create(store, prefix + ".fc_in", dim, dim, rng);
    blk.fc_hidden = Dense::create(store, prefix + ".fc_hidden", dim, dim, rng);
    blk.glu_gate = Dense::create(store, prefix + ".glu_gate", dim, dim, rng);
    blk.glu_lin = Dense::create(store, prefix + ".glu_lin", dim, dim, rng);
    blk.has_context = context_dim > 0;
    if (blk.has_context) {
        blk.ctx_proj = Dense::create(store, prefix + ".ctx", context_dim, dim, rng, false);
    }
    blk.norm_scale = store.add(prefix + ".ln_scale", Tensor({dim}, 1.0));
    blk.norm_bias = store.add(prefix + ".ln_bias", Tensor({dim}, 0.0));
    return blk;
}

NodeId GatedResidualBlock::apply(GraphContext& ctx, NodeId a, std::optional<NodeId> context) const {
    Graph& g = ctx.graph();
    if (context.has_value() && !has_context) {
        throw std::invalid_argument("grn_forward: context supplied to a block built without one");
    }
    NodeId z = fc_in.apply(ctx, a);
    if (context.has_value()) {
        z = g.add(z, ctx_proj.apply(ctx, *context));  // context row broadcast over steps
    }
    NodeId eta = fc_hidden.apply(ctx, g.elu(z));
    eta = ctx.dropout(eta);
    NodeId gated = g.mul(g.sigmoid(glu_gate.apply(ctx, eta)), glu_lin.apply(ctx, eta));
    NodeId normed = g.layer_norm(g.add(a, gated));
    return g.add(g.mul(normed, ctx.bind(norm_scale)), ctx.bind(norm_bias));
}

VariableSelection VariableSelection::create(ParamStore& store, const std::string& prefix,
                                            std::size_t num_vars, std::size_t dim, Rng& rng,
                                            std::size_t context_dim) {
    VariableSelection vs;
    vs.dim = dim;
    vs.num_vars = num_vars;
    for (std::size_t v = 0; v < num_vars; ++v) {
        vs.transforms.push_back(
            GatedResidualBlock::create(store, prefix + ".var" + std::to_string(v), dim, rng));
    }
    vs.sel_hidden = Dense::create(store, prefix + ".sel_hidden", num_vars * dim, dim, rng);
    vs.sel_out = Dense::create(store, prefix + ".sel_out", dim, num_vars, rng);
    vs.has_context = context_dim > 0;
    if (vs.has_context) {
        vs.sel_ctx = Dense::create(store, prefix + ".sel_ctx", context_dim, dim, rng, false);
    }
    return vs;
}

VariableSelection::Result VariableSelection::apply(GraphContext& ctx,
                                                   const std::vector<NodeId>& variables,
                                                   std::optional<NodeId> context) const {
    Graph& g = ctx.graph();
    if (variables.size() != num_vars) {
        throw std::invalid_argument("variable_select: expected " + std::to_string(num_vars) +
                                    " variables, got " + std::to_string(variables.size()));
    }
    if (context.has_value() && !has_context) {
        throw std::invalid_argument("variable_select: context supplied to a block built without one");
    }
    NodeId flat = num_vars == 1 ? variables[0] : g.concat(variables, 1);
    NodeId z = sel_hidden.apply(ctx, flat);
    if (context.has_value()) z = g.add(z, sel_ctx.apply(ctx, *context));
    NodeId logits = sel_out.apply(ctx, g.elu(z));
    NodeId weights = g.softmax(logits, 1);  // [n x V]

    NodeId combined = 0;
    for (std::size_t v = 0; v < num_vars; ++v) {
        NodeId transformed = transforms[v].apply(ctx, variables[v]);
        NodeId weighted = num_vars == 1 ? transformed
                                        : g.mul(transformed, g.slice(weights, 1, v, 1));
        combined = v == 0 ? weighted : g.add(combined, weighted);
    }
    return {combined, weights};
}

InterpretableMultiHead InterpretableMultiHead::create(ParamStore& store, const std::string& prefix,
                                                      std::size_t dim, std::size_t heads,
                                                      Rng& rng) {
    if (heads == 0 || dim % heads != 0) {
        throw std::invalid_argument("interpretable_mha: hidden dim " + std::to_string(dim) +
                                    " not divisible by head count " + std::to_string(heads));
    }
    InterpretableMultiHead mha;
    mha.dim = dim;
    mha.heads = heads;
    const std::size_t head_dim = dim / heads;
    for (std::size_t h = 0; h < heads; ++h) {
        mha.q_proj.push_back(
            Dense::create(store, prefix + ".q" + std::to_string(h), dim, head_dim, rng, false));
        mha.k_proj.push_back(
            Dense::create(store, prefix + ".k" + std::to_string(h), dim, head_dim, rng, false));
    }
    mha.v_proj = Dense::create(store, prefix + ".v", dim, dim, rng, false);
    mha.out_proj = Dense::create(store, prefix + ".out", dim, dim, rng);
    return mha;
}

InterpretableMultiHead::Result InterpretableMultiHead::apply(
    GraphContext& ctx, NodeId queries, NodeId keys_values,
    const std::vector<std::uint8_t>& keep) const {
    Graph& g = ctx.graph();
    const std::size_t head_dim = dim / heads;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    NodeId attn_sum = 0;
    for (std::size_t h = 0; h < heads; ++h) {
        NodeId q = q_proj[h].apply(ctx, queries);      // [tau x dh]
        NodeId k = k_proj[h].apply(ctx, keys_values);  // [L x dh]
        NodeId scores = g.scale(g.matmul_bt(q, k), attn_scale);
        NodeId a = g.masked_softmax(scores, 1, keep);
        attn_sum = h == 0 ? a : g.add(attn_sum, a);
    }
    NodeId attention = g.scale(attn_sum, 1.0 / static_cast<double>(heads));
    NodeId values = v_proj.apply(ctx, keys_values);  // [L x dim]
    NodeId output = out_proj.apply(ctx, g.matmul(attention, values));
    return {output, attention};
}

QuantileHead QuantileHead::create(ParamStore& store, const std::string& prefix, std::size_t dim,
                                  std::vector<double> levels, Rng& rng) {
    if (levels.empty()) throw std::invalid_argument("quantile head: no levels configured");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] <= 0.0 || levels[i] >= 1.0 || (i > 0 && levels[i] <= levels[i - 1])) {
            throw std::invalid_argument(
                "quantile head: levels must be strictly increasing within (0,1)");
        }
    }
    QuantileHead head;
    head.levels = std::move(levels);
    head.proj = Dense::create(store, prefix + ".proj", dim, head.levels.size(), rng);
    return head;
}

NodeId QuantileHead::apply_raw(GraphContext& ctx, NodeId features) const {
    return proj.apply(ctx, features);
}

void QuantileHead::sort_rows(Tensor& raw) {
    const std::size_t q = raw.extent(1);
    for (std::size_t r = 0; r < raw.extent(0); ++r) {
        std::sort(raw.data() + r * q, raw.data() + (r + 1) * q);
    }
}

}  // namespace tempofuse
