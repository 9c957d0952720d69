#pragma once

#include <cstddef>
#include <vector>

#include "icl/matrix.hpp"

namespace icl {

/// Reverse-mode tape over Matrix-valued operations. A fresh Tape is built
/// per forward pass; backward() fills gradients for every node reachable
/// from the scalar root. Node values are immutable once recorded.
class Tape {
public:
    using NodeId = std::size_t;

    static constexpr double kLogClamp = 1e-12;

    NodeId leaf(Matrix value, bool requires_grad = false);

    NodeId matmul(NodeId a, NodeId b);
    /// Broadcast-add a 1xD row vector to every row of an NxD matrix.
    NodeId add_row_vector(NodeId m, NodeId row);
    NodeId add(NodeId a, NodeId b);
    NodeId relu(NodeId x);
    /// Row-wise softmax with max-subtraction. Throws NumericError on
    /// non-finite input.
    NodeId softmax_rows(NodeId x);
    /// Elementwise x^p. Derivative base is clamped away from zero.
    NodeId pow_elem(NodeId x, double p);
    /// Divide each row by its sum.
    NodeId normalize_rows(NodeId x);
    /// log(max(x, kLogClamp)); gradient is zero in the clamped region.
    NodeId log_clamped(NodeId x);
    NodeId mul_elem(NodeId a, NodeId b);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId slice_cols(NodeId x, std::size_t col_begin, std::size_t col_end);
    /// Sum of all entries, as a 1x1 matrix.
    NodeId sum_all(NodeId x);
    NodeId scale(NodeId x, double s);

    const Matrix& value(NodeId id) const { return nodes_[id].value; }
    double scalar(NodeId id) const;

    /// Propagate d(root)/d(node) to every node. root must be 1x1.
    void backward(NodeId root);

    /// Gradient of the last backward() root w.r.t. this node.
    /// Throws if backward() has not been run.
    const Matrix& grad(NodeId id) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        Leaf, MatMul, AddRowVec, Add, Relu, SoftmaxRows, PowElem,
        NormalizeRows, LogClamped, MulElem, ConcatCols, SliceCols,
        SumAll, Scale
    };

    struct Node {
        Op op;
        Matrix value;
        std::vector<NodeId> inputs;
        double scalar_arg = 0.0;       // exponent / scale factor
        std::size_t col_begin = 0;     // slice bounds
        std::size_t col_end = 0;
        Matrix grad;
        bool has_grad = false;
    };

    NodeId push(Node n);
    Matrix& accum(NodeId id, std::size_t rows, std::size_t cols);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace icl
