#pragma once

#include <vector>

#include "skipopt/quantize.hpp"
#include "skipopt/tensor.hpp"

namespace skipopt {

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so a
/// reverse sweep is a valid topological backward pass. Single-owner: one
/// forward evaluation and one backward per tape.
class Tape {
public:
    using NodeId = int;

    NodeId leaf(Tensor value, bool requires_grad = false);

    /// Same-padded 2D conv. x is (H,W,C), w is (K,K,Cin,Cout), odd K.
    NodeId conv2d(NodeId x, NodeId w, int stride);
    /// y_j = sum_i x_i * w_ij over the flattened input. w is (in, out).
    NodeId dense(NodeId x, NodeId w);
    NodeId relu(NodeId x);
    NodeId add(NodeId a, NodeId b);
    /// Fixed-point rounding with a straight-through gradient.
    NodeId fake_quantize(NodeId x, const QuantSpec& spec);
    NodeId softmax(NodeId x);
    /// Scalar -log softmax(x)[label], computed with a stable log-sum-exp.
    NodeId cross_entropy_with_softmax(NodeId logits, int label);
    /// Scalar mean squared difference.
    NodeId mse(NodeId a, NodeId b);
    /// Scalar mean of all elements.
    NodeId mean(NodeId x);
    /// ca * a + cb * b, elementwise.
    NodeId axpby(double ca, NodeId a, double cb, NodeId b);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    /// Accumulates gradients of `loss` (a scalar node) into every node that
    /// requires them. Must be called once per tape.
    void backward(NodeId loss);
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
    bool is_leaf(NodeId id) const { return nodes_[id].op == Op::Leaf; }
    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        Leaf,
        Conv2d,
        Dense,
        ReLU,
        Add,
        FakeQuantize,
        Softmax,
        CrossEntropySoftmax,
        Mse,
        Mean,
        Axpby,
    };

    struct Node {
        Op op = Op::Leaf;
        NodeId a = -1;
        NodeId b = -1;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        int stride = 1;     // Conv2d
        int label = 0;      // CrossEntropySoftmax
        double ca = 1.0;    // Axpby
        double cb = 1.0;
        QuantSpec qspec;    // FakeQuantize
    };

    NodeId push(Node node);
    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

} // namespace skipopt
