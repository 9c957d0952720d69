#include "icl/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace icl {

Tape::NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

Tape::NodeId Tape::leaf(Matrix value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.scalar_arg = requires_grad ? 1.0 : 0.0;
    return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::MatMul;
    n.value = icl::matmul(value(a), value(b));
    n.inputs = {a, b};
    return push(std::move(n));
}

Tape::NodeId Tape::add_row_vector(NodeId m, NodeId row) {
    const Matrix& mv = value(m);
    const Matrix& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != mv.cols())
        throw DimensionError("add_row_vector: " + mv.shape() + " + " + rv.shape());
    Node n;
    n.op = Op::AddRowVec;
    n.value = mv;
    for (std::size_t i = 0; i < mv.rows(); ++i)
        for (std::size_t j = 0; j < mv.cols(); ++j)
            n.value(i, j) += rv(0, j);
    n.inputs = {m, row};
    return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Add;
    n.value = value(a) + value(b);
    n.inputs = {a, b};
    return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId x) {
    Node n;
    n.op = Op::Relu;
    n.value = value(x);
    for (double& v : n.value.data()) v = std::max(0.0, v);
    n.inputs = {x};
    return push(std::move(n));
}

Tape::NodeId Tape::softmax_rows(NodeId x) {
    const Matrix& in = value(x);
    if (!in.all_finite())
        throw NumericError("softmax_rows: non-finite input");
    Node n;
    n.op = Op::SoftmaxRows;
    n.value = Matrix(in.rows(), in.cols());
    for (std::size_t i = 0; i < in.rows(); ++i) {
        double mx = in(i, 0);
        for (std::size_t j = 1; j < in.cols(); ++j) mx = std::max(mx, in(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < in.cols(); ++j) {
            double e = std::exp(in(i, j) - mx);
            n.value(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < in.cols(); ++j) n.value(i, j) /= sum;
    }
    n.inputs = {x};
    return push(std::move(n));
}

Tape::NodeId Tape::pow_elem(NodeId x, double p) {
    Node n;
    n.op = Op::PowElem;
    n.value = value(x);
    for (double& v : n.value.data()) v = std::pow(v, p);
    n.inputs = {x};
    n.scalar_arg = p;
    return push(std::move(n));
}

Tape::NodeId Tape::normalize_rows(NodeId x) {
    const Matrix& in = value(x);
    Node n;
    n.op = Op::NormalizeRows;
    n.value = Matrix(in.rows(), in.cols());
    for (std::size_t i = 0; i < in.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < in.cols(); ++j) s += in(i, j);
        if (s <= 0.0)
            throw NumericError("normalize_rows: non-positive row sum");
        for (std::size_t j = 0; j < in.cols(); ++j) n.value(i, j) = in(i, j) / s;
    }
    n.inputs = {x};
    return push(std::move(n));
}

Tape::NodeId Tape::log_clamped(NodeId x) {
    Node n;
    n.op = Op::LogClamped;
    n.value = value(x);
    for (double& v : n.value.data()) v = std::log(std::max(v, kLogClamp));
    n.inputs = {x};
    return push(std::move(n));
}

Tape::NodeId Tape::mul_elem(NodeId a, NodeId b) {
    Node n;
    n.op = Op::MulElem;
    n.value = hadamard(value(a), value(b));
    n.inputs = {a, b};
    return push(std::move(n));
}

Tape::NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty())
        throw DimensionError("concat_cols: empty part list");
    std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    for (NodeId p : parts) {
        if (value(p).rows() != rows)
            throw DimensionError("concat_cols: row count mismatch");
        cols += value(p).cols();
    }
    Node n;
    n.op = Op::ConcatCols;
    n.value = Matrix(rows, cols);
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Matrix& pv = value(p);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j)
                n.value(i, off + j) = pv(i, j);
        off += pv.cols();
    }
    n.inputs = parts;
    return push(std::move(n));
}

Tape::NodeId Tape::slice_cols(NodeId x, std::size_t col_begin, std::size_t col_end) {
    const Matrix& in = value(x);
    if (col_begin >= col_end || col_end > in.cols())
        throw DimensionError("slice_cols: bad range");
    Node n;
    n.op = Op::SliceCols;
    n.value = Matrix(in.rows(), col_end - col_begin);
    for (std::size_t i = 0; i < in.rows(); ++i)
        for (std::size_t j = col_begin; j < col_end; ++j)
            n.value(i, j - col_begin) = in(i, j);
    n.inputs = {x};
    n.col_begin = col_begin;
    n.col_end = col_end;
    return push(std::move(n));
}

Tape::NodeId Tape::sum_all(NodeId x) {
    Node n;
    n.op = Op::SumAll;
    double s = 0.0;
    for (double v : value(x).data()) s += v;
    n.value = Matrix(1, 1, s);
    n.inputs = {x};
    return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId x, double s) {
    Node n;
    n.op = Op::Scale;
    n.value = value(x) * s;
    n.inputs = {x};
    n.scalar_arg = s;
    return push(std::move(n));
}

double Tape::scalar(NodeId id) const {
    const Matrix& v = value(id);
    if (v.rows() != 1 || v.cols() != 1)
        throw DimensionError("scalar: node is " + v.shape());
    return v(0, 0);
}

Matrix& Tape::accum(NodeId id, std::size_t rows, std::size_t cols) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Matrix(rows, cols);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(NodeId root) {
    if (nodes_.empty() || root >= nodes_.size())
        throw std::logic_error("backward: no forward pass recorded");
    const Matrix& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1)
        throw DimensionError("backward: root must be a 1x1 scalar, got " + rv.shape());

    for (Node& n : nodes_) n.has_grad = false;
    accum(root, 1, 1)(0, 0) = 1.0;

    for (std::size_t idx = root + 1; idx-- > 0;) {
        Node& n = nodes_[idx];
        if (!n.has_grad) continue;
        const Matrix& g = n.grad;
        switch (n.op) {
        case Op::Leaf:
            break;
        case Op::MatMul: {
            const Matrix& a = value(n.inputs[0]);
            const Matrix& b = value(n.inputs[1]);
            Matrix da = icl::matmul(g, transpose(b));
            Matrix db = icl::matmul(transpose(a), g);
            Matrix& ga = accum(n.inputs[0], a.rows(), a.cols());
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += da[i];
            Matrix& gb = accum(n.inputs[1], b.rows(), b.cols());
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += db[i];
            break;
        }
        case Op::AddRowVec: {
            const Matrix& m = value(n.inputs[0]);
            Matrix& gm = accum(n.inputs[0], m.rows(), m.cols());
            for (std::size_t i = 0; i < gm.size(); ++i) gm[i] += g[i];
            Matrix& gr = accum(n.inputs[1], 1, m.cols());
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j)
                    gr(0, j) += g(i, j);
            break;
        }
        case Op::Add: {
            for (int k = 0; k < 2; ++k) {
                Matrix& gi = accum(n.inputs[k], g.rows(), g.cols());
                for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
            }
            break;
        }
        case Op::Relu: {
            const Matrix& x = value(n.inputs[0]);
            Matrix& gx = accum(n.inputs[0], x.rows(), x.cols());
            for (std::size_t i = 0; i < gx.size(); ++i)
                if (x[i] > 0.0) gx[i] += g[i];
            break;
        }
        case Op::SoftmaxRows: {
            const Matrix& y = n.value;
            Matrix& gx = accum(n.inputs[0], y.rows(), y.cols());
            for (std::size_t i = 0; i < y.rows(); ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
                for (std::size_t j = 0; j < y.cols(); ++j)
                    gx(i, j) += y(i, j) * (g(i, j) - dot);
            }
            break;
        }
        case Op::PowElem: {
            const Matrix& x = value(n.inputs[0]);
            double p = n.scalar_arg;
            Matrix& gx = accum(n.inputs[0], x.rows(), x.cols());
            for (std::size_t i = 0; i < gx.size(); ++i) {
                double base = std::max(x[i], kLogClamp);
                gx[i] += g[i] * p * std::pow(base, p - 1.0);
            }
            break;
        }
        case Op::NormalizeRows: {
            const Matrix& x = value(n.inputs[0]);
            const Matrix& y = n.value;
            Matrix& gx = accum(n.inputs[0], x.rows(), x.cols());
            for (std::size_t i = 0; i < x.rows(); ++i) {
                double s = 0.0, dot = 0.0;
                for (std::size_t j = 0; j < x.cols(); ++j) {
                    s += x(i, j);
                    dot += g(i, j) * y(i, j);
                }
                for (std::size_t j = 0; j < x.cols(); ++j)
                    gx(i, j) += (g(i, j) - dot) / s;
            }
            break;
        }
        case Op::LogClamped: {
            const Matrix& x = value(n.inputs[0]);
            Matrix& gx = accum(n.inputs[0], x.rows(), x.cols());
            for (std::size_t i = 0; i < gx.size(); ++i)
                if (x[i] > kLogClamp) gx[i] += g[i] / x[i];
            break;
        }
        case Op::MulElem: {
            const Matrix& a = value(n.inputs[0]);
            const Matrix& b = value(n.inputs[1]);
            Matrix& ga = accum(n.inputs[0], a.rows(), a.cols());
            Matrix& gb = accum(n.inputs[1], b.rows(), b.cols());
            for (std::size_t i = 0; i < a.size(); ++i) {
                ga[i] += g[i] * b[i];
                gb[i] += g[i] * a[i];
            }
            break;
        }
        case Op::ConcatCols: {
            std::size_t off = 0;
            for (NodeId p : n.inputs) {
                const Matrix& pv = value(p);
                Matrix& gp = accum(p, pv.rows(), pv.cols());
                for (std::size_t i = 0; i < pv.rows(); ++i)
                    for (std::size_t j = 0; j < pv.cols(); ++j)
                        gp(i, j) += g(i, off + j);
                off += pv.cols();
            }
            break;
        }
        case Op::SliceCols: {
            const Matrix& x = value(n.inputs[0]);
            Matrix& gx = accum(n.inputs[0], x.rows(), x.cols());
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j)
                    gx(i, n.col_begin + j) += g(i, j);
            break;
        }
        case Op::SumAll: {
            const Matrix& x = value(n.inputs[0]);
            Matrix& gx = accum(n.inputs[0], x.rows(), x.cols());
            double gs = g(0, 0);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gs;
            break;
        }
        case Op::Scale: {
            const Matrix& x = value(n.inputs[0]);
            Matrix& gx = accum(n.inputs[0], x.rows(), x.cols());
            for (std::size_t i = 0; i < gx.size(); ++i)
                gx[i] += g[i] * n.scalar_arg;
            break;
        }
        }
    }
    backward_done_ = true;
}

const Matrix& Tape::grad(NodeId id) const {
    if (!backward_done_)
        throw std::logic_error("grad: backward() has not been run on this tape");
    const Node& n = nodes_[id];
    if (!n.has_grad) {
        // Node not reachable from the root: gradient is zero.
        thread_local Matrix zero;
        zero = Matrix(n.value.rows(), n.value.cols());
        return zero;
    }
    return n.grad;
}

}  // namespace icl
