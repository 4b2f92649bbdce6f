#include "tempofuse/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tempofuse {

namespace {

constexpr double kLayerNormEps = 1e-5;

// Views a shape as [outer, m, inner] around `axis`.
struct AxisView {
    std::size_t outer = 1;
    std::size_t m = 1;
    std::size_t inner = 1;
};

AxisView axis_view(const std::vector<std::size_t>& shape, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
    v.m = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
    return v;
}

[[noreturn]] void shape_error(Op op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op_name(op)) + ": incompatible shapes " +
                                a.shape_str() + " and " + b.shape_str());
}

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::input: return "input";
        case Op::param: return "param";
        case Op::add: return "add";
        case Op::add_row: return "add";
        case Op::add_col: return "add";
        case Op::sub: return "subtract";
        case Op::mul: return "multiply";
        case Op::mul_row: return "multiply";
        case Op::mul_col: return "multiply";
        case Op::matmul: return "matmul";
        case Op::matmul_bt: return "matmul_bt";
        case Op::concat: return "concat";
        case Op::slice: return "slice";
        case Op::sum: return "sum";
        case Op::mean: return "mean";
        case Op::sigmoid: return "sigmoid";
        case Op::tanh_fn: return "tanh";
        case Op::elu: return "elu";
        case Op::abs_fn: return "abs";
        case Op::softmax: return "softmax";
        case Op::masked_softmax: return "masked_softmax";
        case Op::layer_norm: return "layer_norm";
        case Op::scale: return "scale";
        case Op::select_row: return "select_row";
    }
    return "?";
}

void Graph::check_id(NodeId id) const {
    if (id >= nodes_.size()) throw std::logic_error("graph: node id out of range");
}

NodeId Graph::push(Node node) {
    if (node.op != Op::input && node.op != Op::param) {
        for (NodeId in : node.inputs) {
            if (nodes_[in].requires_grad) {
                node.requires_grad = true;
                break;
            }
        }
        eval(node);
    }
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor value) {
    Node n;
    n.op = Op::input;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Graph::parameter(Tensor value) {
    Node n;
    n.op = Op::param;
    n.value = std::move(value);
    n.requires_grad = true;
    NodeId id = push(std::move(n));
    params_.push_back(id);
    return id;
}

NodeId Graph::add(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    Node n;
    n.inputs = {a, b};
    if (va.same_shape(vb)) {
        n.op = Op::add;
    } else if (vb.rank() == 1 && va.rank() > 1 && vb.size() == va.shape().back()) {
        n.op = Op::add_row;
    } else if (vb.rank() == 2 && va.rank() == 2 && vb.extent(0) == 1 &&
               vb.extent(1) == va.extent(1)) {
        n.op = Op::add_row;
    } else if (va.rank() == 2 && vb.rank() == 2 && vb.extent(0) == va.extent(0) &&
               vb.extent(1) == 1 && va.extent(1) > 1) {
        n.op = Op::add_col;
    } else {
        shape_error(Op::add, va, vb);
    }
    return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    if (!nodes_[a].value.same_shape(nodes_[b].value)) {
        shape_error(Op::sub, nodes_[a].value, nodes_[b].value);
    }
    Node n;
    n.op = Op::sub;
    n.inputs = {a, b};
    return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    Node n;
    n.inputs = {a, b};
    if (va.same_shape(vb)) {
        n.op = Op::mul;
    } else if (vb.rank() == 1 && va.rank() > 1 && vb.size() == va.shape().back()) {
        n.op = Op::mul_row;
    } else if (vb.rank() == 2 && va.rank() == 2 && vb.extent(0) == 1 &&
               vb.extent(1) == va.extent(1)) {
        n.op = Op::mul_row;
    } else if (va.rank() == 2 && vb.rank() == 2 && vb.extent(0) == va.extent(0) &&
               vb.extent(1) == 1 && va.extent(1) > 1) {
        n.op = Op::mul_col;
    } else {
        shape_error(Op::mul, va, vb);
    }
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (va.rank() != 2 || vb.rank() != 2 || va.extent(1) != vb.extent(0)) {
        shape_error(Op::matmul, va, vb);
    }
    Node n;
    n.op = Op::matmul;
    n.inputs = {a, b};
    return push(std::move(n));
}

NodeId Graph::matmul_bt(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (va.rank() != 2 || vb.rank() != 2 || va.extent(1) != vb.extent(1)) {
        shape_error(Op::matmul_bt, va, vb);
    }
    Node n;
    n.op = Op::matmul_bt;
    n.inputs = {a, b};
    return push(std::move(n));
}

NodeId Graph::concat(const std::vector<NodeId>& parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    for (NodeId id : parts) check_id(id);
    const Tensor& first = nodes_[parts[0]].value;
    if (axis >= first.rank()) {
        throw std::invalid_argument("concat: axis " + std::to_string(axis) + " out of range for " +
                                    first.shape_str());
    }
    for (NodeId id : parts) {
        const Tensor& v = nodes_[id].value;
        if (v.rank() != first.rank()) shape_error(Op::concat, first, v);
        for (std::size_t d = 0; d < first.rank(); ++d) {
            if (d != axis && v.extent(d) != first.extent(d)) shape_error(Op::concat, first, v);
        }
    }
    Node n;
    n.op = Op::concat;
    n.inputs = parts;
    n.axis = axis;
    return push(std::move(n));
}

NodeId Graph::slice(NodeId a, std::size_t axis, std::size_t start, std::size_t len) {
    check_id(a);
    const Tensor& v = nodes_[a].value;
    if (axis >= v.rank() || len == 0 || start + len > v.extent(axis)) {
        throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                    std::to_string(start + len) + ") invalid for axis " +
                                    std::to_string(axis) + " of " + v.shape_str());
    }
    Node n;
    n.op = Op::slice;
    n.inputs = {a};
    n.axis = axis;
    n.start = start;
    n.len = len;
    return push(std::move(n));
}

NodeId Graph::sum(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::sum;
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::mean(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::mean;
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::sigmoid;
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::tanh_fn;
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::elu(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::elu;
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::abs(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::abs_fn;
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::softmax(NodeId a, std::size_t axis) {
    check_id(a);
    const Tensor& v = nodes_[a].value;
    if (axis >= v.rank()) {
        throw std::invalid_argument("softmax: axis " + std::to_string(axis) +
                                    " out of range for " + v.shape_str());
    }
    Node n;
    n.op = Op::softmax;
    n.inputs = {a};
    n.axis = axis;
    return push(std::move(n));
}

NodeId Graph::masked_softmax(NodeId a, std::size_t axis, std::vector<std::uint8_t> keep) {
    check_id(a);
    const Tensor& v = nodes_[a].value;
    if (axis >= v.rank()) {
        throw std::invalid_argument("masked_softmax: axis " + std::to_string(axis) +
                                    " out of range for " + v.shape_str());
    }
    if (keep.size() != v.size()) {
        throw std::invalid_argument("masked_softmax: mask size " + std::to_string(keep.size()) +
                                    " does not match " + v.shape_str());
    }
    Node n;
    n.op = Op::masked_softmax;
    n.inputs = {a};
    n.axis = axis;
    n.keep = std::move(keep);
    return push(std::move(n));
}

NodeId Graph::layer_norm(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::layer_norm;
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double factor) {
    check_id(a);
    Node n;
    n.op = Op::scale;
    n.inputs = {a};
    n.factor = factor;
    return push(std::move(n));
}

NodeId Graph::select_row(NodeId matrix, std::size_t row) {
    check_id(matrix);
    const Tensor& v = nodes_[matrix].value;
    if (v.rank() != 2 || row >= v.extent(0)) {
        throw std::invalid_argument("select_row: row " + std::to_string(row) +
                                    " out of range for " + v.shape_str());
    }
    Node n;
    n.op = Op::select_row;
    n.inputs = {matrix};
    n.row = row;
    return push(std::move(n));
}

void Graph::eval(Node& node) const {
    switch (node.op) {
        case Op::input:
        case Op::param:
            return;
        case Op::add: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            node.value = a;
            for (std::size_t i = 0; i < b.size(); ++i) node.value[i] += b[i];
            return;
        }
        case Op::add_row: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            node.value = a;
            const std::size_t d = b.size();
            for (std::size_t i = 0; i < a.size(); ++i) node.value[i] += b[i % d];
            return;
        }
        case Op::add_col: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            node.value = a;
            const std::size_t cols = a.extent(1);
            for (std::size_t r = 0; r < a.extent(0); ++r) {
                for (std::size_t c = 0; c < cols; ++c) node.value.at(r, c) += b[r];
            }
            return;
        }
        case Op::sub: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            node.value = a;
            for (std::size_t i = 0; i < b.size(); ++i) node.value[i] -= b[i];
            return;
        }
        case Op::mul: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            node.value = a;
            for (std::size_t i = 0; i < b.size(); ++i) node.value[i] *= b[i];
            return;
        }
        case Op::mul_row: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            node.value = a;
            const std::size_t d = b.size();
            for (std::size_t i = 0; i < a.size(); ++i) node.value[i] *= b[i % d];
            return;
        }
        case Op::mul_col: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            node.value = a;
            const std::size_t cols = a.extent(1);
            for (std::size_t r = 0; r < a.extent(0); ++r) {
                for (std::size_t c = 0; c < cols; ++c) node.value.at(r, c) *= b[r];
            }
            return;
        }
        case Op::matmul: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
            node.value = Tensor({m, n}, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t l = 0; l < k; ++l) {
                    const double ail = a.at(i, l);
                    if (ail == 0.0) continue;
                    const double* brow = b.data() + l * n;
                    double* orow = node.value.data() + i * n;
                    for (std::size_t j = 0; j < n; ++j) orow[j] += ail * brow[j];
                }
            }
            return;
        }
        case Op::matmul_bt: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const Tensor& b = nodes_[node.inputs[1]].value;
            const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(0);
            node.value = Tensor({m, n}, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = a.data() + i * k;
                for (std::size_t j = 0; j < n; ++j) {
                    const double* brow = b.data() + j * k;
                    double acc = 0.0;
                    for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
                    node.value.at(i, j) = acc;
                }
            }
            return;
        }
        case Op::concat: {
            const Tensor& first = nodes_[node.inputs[0]].value;
            std::vector<std::size_t> shape = first.shape();
            std::size_t total = 0;
            for (NodeId id : node.inputs) total += nodes_[id].value.extent(node.axis);
            shape[node.axis] = total;
            node.value = Tensor(shape, 0.0);
            const AxisView out = axis_view(shape, node.axis);
            std::size_t off = 0;
            for (NodeId id : node.inputs) {
                const Tensor& part = nodes_[id].value;
                const std::size_t pm = part.extent(node.axis);
                for (std::size_t o = 0; o < out.outer; ++o) {
                    const double* src = part.data() + o * pm * out.inner;
                    double* dst = node.value.data() + (o * out.m + off) * out.inner;
                    std::copy(src, src + pm * out.inner, dst);
                }
                off += pm;
            }
            return;
        }
        case Op::slice: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            std::vector<std::size_t> shape = a.shape();
            shape[node.axis] = node.len;
            node.value = Tensor(shape, 0.0);
            const AxisView in = axis_view(a.shape(), node.axis);
            for (std::size_t o = 0; o < in.outer; ++o) {
                const double* src = a.data() + (o * in.m + node.start) * in.inner;
                double* dst = node.value.data() + o * node.len * in.inner;
                std::copy(src, src + node.len * in.inner, dst);
            }
            return;
        }
        case Op::sum: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
            node.value = Tensor::scalar(acc);
            return;
        }
        case Op::mean: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
            node.value = Tensor::scalar(acc / static_cast<double>(a.size()));
            return;
        }
        case Op::sigmoid: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            for (std::size_t i = 0; i < a.size(); ++i) {
                node.value[i] = 1.0 / (1.0 + std::exp(-a[i]));
            }
            return;
        }
        case Op::tanh_fn: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            for (std::size_t i = 0; i < a.size(); ++i) node.value[i] = std::tanh(a[i]);
            return;
        }
        case Op::elu: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            for (std::size_t i = 0; i < a.size(); ++i) {
                node.value[i] = a[i] > 0.0 ? a[i] : std::expm1(a[i]);
            }
            return;
        }
        case Op::abs_fn: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            for (std::size_t i = 0; i < a.size(); ++i) node.value[i] = std::fabs(a[i]);
            return;
        }
        case Op::softmax: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            const AxisView v = axis_view(a.shape(), node.axis);
            for (std::size_t o = 0; o < v.outer; ++o) {
                for (std::size_t i = 0; i < v.inner; ++i) {
                    const std::size_t base = o * v.m * v.inner + i;
                    double mx = a[base];
                    for (std::size_t j = 1; j < v.m; ++j) {
                        mx = std::max(mx, a[base + j * v.inner]);
                    }
                    double z = 0.0;
                    for (std::size_t j = 0; j < v.m; ++j) {
                        const double e = std::exp(a[base + j * v.inner] - mx);
                        node.value[base + j * v.inner] = e;
                        z += e;
                    }
                    for (std::size_t j = 0; j < v.m; ++j) node.value[base + j * v.inner] /= z;
                }
            }
            return;
        }
        case Op::masked_softmax: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            const AxisView v = axis_view(a.shape(), node.axis);
            for (std::size_t o = 0; o < v.outer; ++o) {
                for (std::size_t i = 0; i < v.inner; ++i) {
                    const std::size_t base = o * v.m * v.inner + i;
                    double mx = 0.0;
                    bool any = false;
                    for (std::size_t j = 0; j < v.m; ++j) {
                        const std::size_t at = base + j * v.inner;
                        if (!node.keep[at]) continue;
                        mx = any ? std::max(mx, a[at]) : a[at];
                        any = true;
                    }
                    if (!any) {
                        throw std::invalid_argument("masked_softmax: fully masked slice in " +
                                                    a.shape_str());
                    }
                    double z = 0.0;
                    for (std::size_t j = 0; j < v.m; ++j) {
                        const std::size_t at = base + j * v.inner;
                        if (node.keep[at]) {
                            const double e = std::exp(a[at] - mx);
                            node.value[at] = e;
                            z += e;
                        } else {
                            node.value[at] = 0.0;
                        }
                    }
                    for (std::size_t j = 0; j < v.m; ++j) {
                        const std::size_t at = base + j * v.inner;
                        if (node.keep[at]) node.value[at] /= z;
                    }
                }
            }
            return;
        }
        case Op::layer_norm: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            const std::size_t d = a.shape().back();
            const std::size_t rows = a.size() / d;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* x = a.data() + r * d;
                double* y = node.value.data() + r * d;
                double mu = 0.0;
                for (std::size_t j = 0; j < d; ++j) mu += x[j];
                mu /= static_cast<double>(d);
                double var = 0.0;
                for (std::size_t j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
                var /= static_cast<double>(d);
                const double s = std::sqrt(var + kLayerNormEps);
                for (std::size_t j = 0; j < d; ++j) y[j] = (x[j] - mu) / s;
            }
            return;
        }
        case Op::scale: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            node.value = a;
            for (std::size_t i = 0; i < a.size(); ++i) node.value[i] *= node.factor;
            return;
        }
        case Op::select_row: {
            const Tensor& a = nodes_[node.inputs[0]].value;
            const std::size_t d = a.extent(1);
            node.value = Tensor({1, d}, 0.0);
            std::copy(a.data() + node.row * d, a.data() + (node.row + 1) * d, node.value.data());
            return;
        }
    }
}

void Graph::recompute() {
    for (Node& node : nodes_) eval(node);
}

bool Graph::is_leaf(NodeId id) const {
    return nodes_[id].op == Op::input || nodes_[id].op == Op::param;
}

double* Graph::leaf_data(NodeId id) {
    check_id(id);
    if (!is_leaf(id)) throw std::logic_error("leaf_data: node is not a leaf");
    return nodes_[id].value.data();
}

const Tensor& Graph::grad(NodeId id) const {
    static const Tensor empty;
    if (id >= grads_.size()) return empty;
    return grads_[id];
}

bool Graph::has_grad(NodeId id) const {
    return id < grads_.size() && grads_[id].size() > 0;
}

void Graph::backward(NodeId loss) {
    check_id(loss);
    const Tensor& lv = nodes_[loss].value;
    if (lv.size() != 1) {
        throw std::invalid_argument("backward: loss must be scalar [1], got " + lv.shape_str());
    }
    grads_.assign(nodes_.size(), Tensor{});
    for (NodeId p : params_) grads_[p] = Tensor(nodes_[p].value.shape(), 0.0);

    if (!nodes_[loss].requires_grad) return;
    if (grads_[loss].size() == 0) grads_[loss] = Tensor(lv.shape(), 0.0);
    grads_[loss][0] = 1.0;

    auto ensure = [&](NodeId id) -> Tensor& {
        if (grads_[id].size() == 0) grads_[id] = Tensor(nodes_[id].value.shape(), 0.0);
        return grads_[id];
    };
    auto wants = [&](NodeId id) { return nodes_[id].requires_grad; };

    for (NodeId id = loss;; --id) {
        const Node& node = nodes_[id];
        if (grads_[id].size() != 0 && node.requires_grad && !is_leaf(id)) {
            const Tensor& g = grads_[id];
            switch (node.op) {
                case Op::input:
                case Op::param:
                    break;
                case Op::add: {
                    for (int s = 0; s < 2; ++s) {
                        if (!wants(node.inputs[s])) continue;
                        Tensor& gi = ensure(node.inputs[s]);
                        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
                    }
                    break;
                }
                case Op::add_row: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        const std::size_t d = gb.size();
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
                    }
                    break;
                }
                case Op::add_col: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        const std::size_t cols = node.value.extent(1);
                        for (std::size_t r = 0; r < node.value.extent(0); ++r) {
                            for (std::size_t c = 0; c < cols; ++c) gb[r] += g.at(r, c);
                        }
                    }
                    break;
                }
                case Op::sub: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                    }
                    break;
                }
                case Op::mul: {
                    const Tensor& a = nodes_[node.inputs[0]].value;
                    const Tensor& b = nodes_[node.inputs[1]].value;
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
                    }
                    break;
                }
                case Op::mul_row: {
                    const Tensor& a = nodes_[node.inputs[0]].value;
                    const Tensor& b = nodes_[node.inputs[1]].value;
                    const std::size_t d = b.size();
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i % d];
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i] * a[i];
                    }
                    break;
                }
                case Op::mul_col: {
                    const Tensor& a = nodes_[node.inputs[0]].value;
                    const Tensor& b = nodes_[node.inputs[1]].value;
                    const std::size_t rows = node.value.extent(0), cols = node.value.extent(1);
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t c = 0; c < cols; ++c) ga.at(r, c) += g.at(r, c) * b[r];
                        }
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        for (std::size_t r = 0; r < rows; ++r) {
                            double acc = 0.0;
                            for (std::size_t c = 0; c < cols; ++c) acc += g.at(r, c) * a.at(r, c);
                            gb[r] += acc;
                        }
                    }
                    break;
                }
                case Op::matmul: {
                    const Tensor& a = nodes_[node.inputs[0]].value;
                    const Tensor& b = nodes_[node.inputs[1]].value;
                    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t l = 0; l < k; ++l) {
                                const double* grow = g.data() + i * n;
                                const double* brow = b.data() + l * n;
                                double acc = 0.0;
                                for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                                ga.at(i, l) += acc;
                            }
                        }
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        for (std::size_t i = 0; i < m; ++i) {
                            const double* grow = g.data() + i * n;
                            for (std::size_t l = 0; l < k; ++l) {
                                const double ail = a.at(i, l);
                                if (ail == 0.0) continue;
                                double* gbrow = gb.data() + l * n;
                                for (std::size_t j = 0; j < n; ++j) gbrow[j] += ail * grow[j];
                            }
                        }
                    }
                    break;
                }
                case Op::matmul_bt: {
                    const Tensor& a = nodes_[node.inputs[0]].value;
                    const Tensor& b = nodes_[node.inputs[1]].value;
                    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(0);
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < m; ++i) {
                            const double* grow = g.data() + i * n;
                            for (std::size_t j = 0; j < n; ++j) {
                                const double gij = grow[j];
                                if (gij == 0.0) continue;
                                const double* brow = b.data() + j * k;
                                double* garow = ga.data() + i * k;
                                for (std::size_t l = 0; l < k; ++l) garow[l] += gij * brow[l];
                            }
                        }
                    }
                    if (wants(node.inputs[1])) {
                        Tensor& gb = ensure(node.inputs[1]);
                        for (std::size_t i = 0; i < m; ++i) {
                            const double* grow = g.data() + i * n;
                            const double* arow = a.data() + i * k;
                            for (std::size_t j = 0; j < n; ++j) {
                                const double gij = grow[j];
                                if (gij == 0.0) continue;
                                double* gbrow = gb.data() + j * k;
                                for (std::size_t l = 0; l < k; ++l) gbrow[l] += gij * arow[l];
                            }
                        }
                    }
                    break;
                }
                case Op::concat: {
                    const AxisView out = axis_view(node.value.shape(), node.axis);
                    std::size_t off = 0;
                    for (NodeId in : node.inputs) {
                        const std::size_t pm = nodes_[in].value.extent(node.axis);
                        if (wants(in)) {
                            Tensor& gi = ensure(in);
                            for (std::size_t o = 0; o < out.outer; ++o) {
                                const double* src = g.data() + (o * out.m + off) * out.inner;
                                double* dst = gi.data() + o * pm * out.inner;
                                for (std::size_t t = 0; t < pm * out.inner; ++t) dst[t] += src[t];
                            }
                        }
                        off += pm;
                    }
                    break;
                }
                case Op::slice: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        const AxisView in = axis_view(nodes_[node.inputs[0]].value.shape(), node.axis);
                        for (std::size_t o = 0; o < in.outer; ++o) {
                            const double* src = g.data() + o * node.len * in.inner;
                            double* dst = ga.data() + (o * in.m + node.start) * in.inner;
                            for (std::size_t t = 0; t < node.len * in.inner; ++t) dst[t] += src[t];
                        }
                    }
                    break;
                }
                case Op::sum: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
                    }
                    break;
                }
                case Op::mean: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        const double w = g[0] / static_cast<double>(ga.size());
                        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += w;
                    }
                    break;
                }
                case Op::sigmoid: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) {
                            const double y = node.value[i];
                            ga[i] += g[i] * y * (1.0 - y);
                        }
                    }
                    break;
                }
                case Op::tanh_fn: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) {
                            const double y = node.value[i];
                            ga[i] += g[i] * (1.0 - y * y);
                        }
                    }
                    break;
                }
                case Op::elu: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        const Tensor& x = nodes_[node.inputs[0]].value;
                        for (std::size_t i = 0; i < g.size(); ++i) {
                            ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : node.value[i] + 1.0);
                        }
                    }
                    break;
                }
                case Op::abs_fn: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        const Tensor& x = nodes_[node.inputs[0]].value;
                        for (std::size_t i = 0; i < g.size(); ++i) {
                            ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
                        }
                    }
                    break;
                }
                case Op::softmax:
                case Op::masked_softmax: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        const AxisView v = axis_view(node.value.shape(), node.axis);
                        for (std::size_t o = 0; o < v.outer; ++o) {
                            for (std::size_t i = 0; i < v.inner; ++i) {
                                const std::size_t base = o * v.m * v.inner + i;
                                double dot = 0.0;
                                for (std::size_t j = 0; j < v.m; ++j) {
                                    const std::size_t at = base + j * v.inner;
                                    dot += g[at] * node.value[at];
                                }
                                for (std::size_t j = 0; j < v.m; ++j) {
                                    const std::size_t at = base + j * v.inner;
                                    ga[at] += node.value[at] * (g[at] - dot);
                                }
                            }
                        }
                    }
                    break;
                }
                case Op::layer_norm: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        const Tensor& x = nodes_[node.inputs[0]].value;
                        const std::size_t d = x.shape().back();
                        const std::size_t rows = x.size() / d;
                        for (std::size_t r = 0; r < rows; ++r) {
                            const double* xr = x.data() + r * d;
                            const double* yr = node.value.data() + r * d;
                            const double* gr = g.data() + r * d;
                            double mu = 0.0;
                            for (std::size_t j = 0; j < d; ++j) mu += xr[j];
                            mu /= static_cast<double>(d);
                            double var = 0.0;
                            for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
                            var /= static_cast<double>(d);
                            const double s = std::sqrt(var + kLayerNormEps);
                            double gmean = 0.0, gydot = 0.0;
                            for (std::size_t j = 0; j < d; ++j) {
                                gmean += gr[j];
                                gydot += gr[j] * yr[j];
                            }
                            gmean /= static_cast<double>(d);
                            gydot /= static_cast<double>(d);
                            for (std::size_t j = 0; j < d; ++j) {
                                ga.data()[r * d + j] += (gr[j] - gmean - yr[j] * gydot) / s;
                            }
                        }
                    }
                    break;
                }
                case Op::scale: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * node.factor;
                    }
                    break;
                }
                case Op::select_row: {
                    if (wants(node.inputs[0])) {
                        Tensor& ga = ensure(node.inputs[0]);
                        const std::size_t d = ga.extent(1);
                        for (std::size_t j = 0; j < d; ++j) ga.data()[node.row * d + j] += g[j];
                    }
                    break;
                }
            }
        }
        if (id == 0) break;
    }
}

std::string GradCheckReport::summary() const {
    return std::string(pass ? "pass" : "FAIL") + " (checked " + std::to_string(checked) +
           ", max_rel_err " + std::to_string(max_rel_err) + ", max_abs_err " +
           std::to_string(max_abs_err) + ", worst idx " + std::to_string(worst_index) +
           ": analytic " + std::to_string(analytic_at_worst) + " vs numeric " +
           std::to_string(numeric_at_worst) + ")";
}

GradCheckReport grad_check(Graph& g, NodeId loss, NodeId parameter, double rel_tol) {
    if (g.value(loss).size() != 1) {
        throw std::invalid_argument("grad_check: loss must be scalar [1], got " +
                                    g.value(loss).shape_str());
    }
    if (!g.is_parameter(parameter)) {
        throw std::invalid_argument("grad_check: node is not a trainable parameter");
    }
    g.backward(loss);
    const Tensor analytic = g.grad(parameter);

    constexpr double h = 1e-5;
    constexpr double zero_band = 1e-6;
    constexpr double abs_tol = 1e-8;

    GradCheckReport rep;
    rep.pass = true;
    rep.checked = analytic.size();
    double* p = g.leaf_data(parameter);
    double worst_ratio = -1.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        g.recompute();
        const double fp = g.value(loss)[0];
        p[i] = orig - h;
        g.recompute();
        const double fm = g.value(loss)[0];
        p[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[i];
        const double mag = std::max(std::fabs(a), std::fabs(numeric));
        const double err = std::fabs(a - numeric);
        double ratio;
        if (mag < zero_band) {
            rep.max_abs_err = std::max(rep.max_abs_err, err);
            ratio = err / abs_tol;
        } else {
            rep.max_rel_err = std::max(rep.max_rel_err, err / mag);
            ratio = (err / mag) / rel_tol;
        }
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            rep.worst_index = i;
            rep.analytic_at_worst = a;
            rep.numeric_at_worst = numeric;
        }
        if (ratio > 1.0) rep.pass = false;
    }
    g.recompute();
    return rep;
}

}  // namespace tempofuse
