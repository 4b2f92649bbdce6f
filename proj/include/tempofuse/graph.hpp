#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tempofuse/tensor.hpp"

namespace tempofuse {

using NodeId = std::uint32_t;

enum class Op : std::uint8_t {
    input,
    param,
    add,
    add_row,   // rhs [d] broadcast across leading dims
    add_col,   // rhs [n x 1] broadcast across columns
    sub,
    mul,
    mul_row,
    mul_col,
    matmul,    // [m x k] . [k x n]
    matmul_bt, // [m x k] . [n x k]^T
    concat,
    slice,
    sum,       // full reduce -> [1]
    mean,      // full reduce -> [1]
    sigmoid,
    tanh_fn,
    elu,
    abs_fn,
    softmax,
    masked_softmax,
    layer_norm, // over last axis, eps 1e-5
    scale,      // by compile-time constant
    select_row, // one row of a matrix -> [1 x d]
};

const char* op_name(Op op);

// Computation record. Inputs always reference earlier nodes, so the node
// sequence is a topological order by construction.
struct Node {
    Op op = Op::input;
    std::vector<NodeId> inputs;
    Tensor value;
    bool requires_grad = false;

    // op-specific attributes
    std::size_t axis = 0;
    std::size_t start = 0;
    std::size_t len = 0;
    std::size_t row = 0;
    double factor = 1.0;
    std::vector<std::uint8_t> keep;  // masked_softmax: 1 = attend, 0 = blocked
};

// Single-threaded computation graph with reverse-mode differentiation.
// Tensors cached on nodes are immutable once written by forward evaluation;
// run independent graphs for parallel work.
class Graph {
public:
    NodeId input(Tensor value);
    NodeId parameter(Tensor value);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId matmul(NodeId a, NodeId b);
    NodeId matmul_bt(NodeId a, NodeId b);
    NodeId concat(const std::vector<NodeId>& parts, std::size_t axis);
    NodeId slice(NodeId a, std::size_t axis, std::size_t start, std::size_t len);
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId tanh(NodeId a);
    NodeId elu(NodeId a);
    NodeId abs(NodeId a);
    NodeId softmax(NodeId a, std::size_t axis);
    NodeId masked_softmax(NodeId a, std::size_t axis, std::vector<std::uint8_t> keep);
    NodeId layer_norm(NodeId a);
    NodeId scale(NodeId a, double factor);
    NodeId select_row(NodeId matrix, std::size_t row);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    // Gradient of the last backward() target; zeros for unreached parameters.
    const Tensor& grad(NodeId id) const;
    bool has_grad(NodeId id) const;

    bool is_leaf(NodeId id) const;
    bool is_parameter(NodeId id) const { return nodes_[id].op == Op::param; }
    const std::vector<NodeId>& parameters() const { return params_; }
    std::size_t node_count() const { return nodes_.size(); }

    // Mutable access to a leaf's storage (finite differences, weight reload).
    double* leaf_data(NodeId id);

    // Recomputes every op node from current leaf values, in order.
    void recompute();

    // Accumulates d(loss)/d(node) by summation over fan-out. Loss must be a
    // scalar [1] node. Every parameter ends up with a gradient tensor of the
    // same shape as its value (zeros when unreachable from the loss).
    void backward(NodeId loss);

    void reserve(std::size_t n) { nodes_.reserve(n); }

private:
    NodeId push(Node node);
    void eval(Node& node) const;
    void check_id(NodeId id) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<NodeId> params_;
};

struct GradCheckReport {
    bool pass = false;
    double max_rel_err = 0.0;   // worst error among relative-checked elements
    double max_abs_err = 0.0;   // worst error among near-zero elements
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t checked = 0;
    std::string summary() const;
};

// Central-difference check of d(loss)/d(parameter), elementwise, h = 1e-5.
// Elements where both gradients are below 1e-6 in magnitude switch to an
// absolute tolerance of 1e-8. Returns a report instead of throwing.
GradCheckReport grad_check(Graph& g, NodeId loss, NodeId parameter, double rel_tol);

}  // namespace tempofuse
