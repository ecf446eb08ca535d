#include "sobolev/tape.hpp"

#include <cmath>
#include <string>

namespace sobolev::ad {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::inv: return "inv";
        case Op::scale: return "scale";
        case Op::shift: return "shift";
        case Op::matmul: return "matmul";
        case Op::relu: return "relu";
        case Op::leaky_relu: return "leaky_relu";
        case Op::tanh: return "tanh";
        case Op::sigmoid: return "sigmoid";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::sqrt: return "sqrt";
        case Op::abs: return "abs";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::sum: return "sum";
        case Op::rowsum: return "rowsum";
        case Op::colsum: return "colsum";
        case Op::bcast_full: return "bcast_full";
        case Op::bcast_row: return "bcast_row";
        case Op::bcast_col: return "bcast_col";
    }
    return "?";
}

}  // namespace

const Node& Tape::node(NodeId id) const {
    if (!id.valid() || size_t(id.v) >= nodes_.size())
        throw Error("tape: invalid node id " + std::to_string(id.v));
    return nodes_[id.v];
}

void Tape::rollback(size_t mark) {
    if (mark > nodes_.size()) throw Error("tape: rollback mark beyond tape end");
    nodes_.resize(mark);
}

NodeId Tape::push(Node n, const char* opname) {
    if (check_finite_ && !n.val.all_finite())
        throw Error(std::string(opname) + ": non-finite value produced, shape " + n.val.shape_str());
    nodes_.push_back(std::move(n));
    return NodeId{int32_t(nodes_.size() - 1)};
}

NodeId Tape::leaf(Tensor v) {
    Node n;
    n.op = Op::leaf;
    n.val = std::move(v);
    return push(std::move(n), "leaf");
}

NodeId Tape::constant(Tensor v) { return leaf(std::move(v)); }

NodeId Tape::binary_same_shape(Op op, NodeId a, NodeId b, const char* opname) {
    const Tensor& va = node(a).val;
    const Tensor& vb = node(b).val;
    if (!va.same_shape(vb))
        throw Error(std::string(opname) + ": shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
    Node n;
    n.op = op;
    n.a = a.v;
    n.b = b.v;
    n.val = Tensor(va.rows(), va.cols());
    const double* pa = va.data();
    const double* pb = vb.data();
    double* pc = n.val.data();
    const size_t m = va.size();
    switch (op) {
        case Op::add:
            for (size_t i = 0; i < m; ++i) pc[i] = pa[i] + pb[i];
            break;
        case Op::sub:
            for (size_t i = 0; i < m; ++i) pc[i] = pa[i] - pb[i];
            break;
        case Op::mul:
            for (size_t i = 0; i < m; ++i) pc[i] = pa[i] * pb[i];
            break;
        default:
            throw Error("internal: bad binary op");
    }
    return push(std::move(n), opname);
}

NodeId Tape::add(NodeId a, NodeId b) { return binary_same_shape(Op::add, a, b, "add"); }
NodeId Tape::sub(NodeId a, NodeId b) { return binary_same_shape(Op::sub, a, b, "sub"); }
NodeId Tape::mul(NodeId a, NodeId b) { return binary_same_shape(Op::mul, a, b, "mul"); }

NodeId Tape::map_unary(Op op, NodeId a, double c, const char* opname) {
    const Tensor& va = node(a).val;
    Node n;
    n.op = op;
    n.a = a.v;
    n.c = c;
    n.val = Tensor(va.rows(), va.cols());
    const double* p = va.data();
    double* q = n.val.data();
    const size_t m = va.size();
    switch (op) {
        case Op::inv:
            for (size_t i = 0; i < m; ++i) q[i] = 1.0 / p[i];
            break;
        case Op::scale:
            for (size_t i = 0; i < m; ++i) q[i] = c * p[i];
            break;
        case Op::shift:
            for (size_t i = 0; i < m; ++i) q[i] = p[i] + c;
            break;
        case Op::relu:
            for (size_t i = 0; i < m; ++i) q[i] = p[i] > 0.0 ? p[i] : 0.0;
            break;
        case Op::leaky_relu:
            for (size_t i = 0; i < m; ++i) q[i] = p[i] > 0.0 ? p[i] : c * p[i];
            break;
        case Op::tanh:
            for (size_t i = 0; i < m; ++i) q[i] = std::tanh(p[i]);
            break;
        case Op::sigmoid:
            for (size_t i = 0; i < m; ++i) q[i] = 1.0 / (1.0 + std::exp(-p[i]));
            break;
        case Op::exp:
            for (size_t i = 0; i < m; ++i) q[i] = std::exp(p[i]);
            break;
        case Op::log:
            for (size_t i = 0; i < m; ++i) q[i] = std::log(p[i]);
            break;
        case Op::sqrt:
            for (size_t i = 0; i < m; ++i) q[i] = std::sqrt(p[i]);
            break;
        case Op::abs:
            for (size_t i = 0; i < m; ++i) q[i] = std::fabs(p[i]);
            break;
        case Op::sin:
            for (size_t i = 0; i < m; ++i) q[i] = std::sin(p[i]);
            break;
        case Op::cos:
            for (size_t i = 0; i < m; ++i) q[i] = std::cos(p[i]);
            break;
        default:
            throw Error("internal: bad unary op");
    }
    return push(std::move(n), opname);
}

NodeId Tape::inv(NodeId a) { return map_unary(Op::inv, a, 0.0, "inv"); }
NodeId Tape::scale(NodeId a, double c) { return map_unary(Op::scale, a, c, "scale"); }
NodeId Tape::shift(NodeId a, double c) { return map_unary(Op::shift, a, c, "shift"); }
NodeId Tape::relu(NodeId a) { return map_unary(Op::relu, a, 0.0, "relu"); }
NodeId Tape::leaky_relu(NodeId a, double slope) { return map_unary(Op::leaky_relu, a, slope, "leaky_relu"); }
NodeId Tape::tanh(NodeId a) { return map_unary(Op::tanh, a, 0.0, "tanh"); }
NodeId Tape::sigmoid(NodeId a) { return map_unary(Op::sigmoid, a, 0.0, "sigmoid"); }
NodeId Tape::exp(NodeId a) { return map_unary(Op::exp, a, 0.0, "exp"); }
NodeId Tape::log(NodeId a) { return map_unary(Op::log, a, 0.0, "log"); }
NodeId Tape::sqrt(NodeId a) { return map_unary(Op::sqrt, a, 0.0, "sqrt"); }
NodeId Tape::abs(NodeId a) { return map_unary(Op::abs, a, 0.0, "abs"); }
NodeId Tape::sin(NodeId a) { return map_unary(Op::sin, a, 0.0, "sin"); }
NodeId Tape::cos(NodeId a) { return map_unary(Op::cos, a, 0.0, "cos"); }

NodeId Tape::matmul(NodeId a, NodeId b, bool ta, bool tb) {
    Node n;
    n.op = Op::matmul;
    n.a = a.v;
    n.b = b.v;
    n.ta = ta;
    n.tb = tb;
    n.val = matmul_values(node(a).val, node(b).val, ta, tb);
    return push(std::move(n), "matmul");
}

NodeId Tape::sum(NodeId a) {
    const Tensor& va = node(a).val;
    Node n;
    n.op = Op::sum;
    n.a = a.v;
    double s = 0.0;
    for (size_t i = 0; i < va.size(); ++i) s += va.at(i);
    n.val = Tensor::scalar(s);
    return push(std::move(n), "sum");
}

NodeId Tape::rowsum(NodeId a) {
    const Tensor& va = node(a).val;
    Node n;
    n.op = Op::rowsum;
    n.a = a.v;
    n.val = Tensor(va.rows(), 1);
    for (int i = 0; i < va.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < va.cols(); ++j) s += va(i, j);
        n.val(i, 0) = s;
    }
    return push(std::move(n), "rowsum");
}

NodeId Tape::colsum(NodeId a) {
    const Tensor& va = node(a).val;
    Node n;
    n.op = Op::colsum;
    n.a = a.v;
    n.val = Tensor(1, va.cols());
    for (int i = 0; i < va.rows(); ++i)
        for (int j = 0; j < va.cols(); ++j) n.val(0, j) += va(i, j);
    return push(std::move(n), "colsum");
}

NodeId Tape::bcast_full(NodeId a, int rows, int cols) {
    const Tensor& va = node(a).val;
    if (!va.is_scalar()) throw Error("bcast_full: operand must be scalar, got " + va.shape_str());
    Node n;
    n.op = Op::bcast_full;
    n.a = a.v;
    n.val = Tensor::full(rows, cols, va.at(0));
    return push(std::move(n), "bcast_full");
}

NodeId Tape::bcast_row(NodeId a, int rows) {
    const Tensor& va = node(a).val;
    if (va.rows() != 1) throw Error("bcast_row: operand must be a row vector, got " + va.shape_str());
    Node n;
    n.op = Op::bcast_row;
    n.a = a.v;
    n.val = Tensor(rows, va.cols());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < va.cols(); ++j) n.val(i, j) = va(0, j);
    return push(std::move(n), "bcast_row");
}

NodeId Tape::bcast_col(NodeId a, int cols) {
    const Tensor& va = node(a).val;
    if (va.cols() != 1) throw Error("bcast_col: operand must be a column vector, got " + va.shape_str());
    Node n;
    n.op = Op::bcast_col;
    n.a = a.v;
    n.val = Tensor(va.rows(), cols);
    for (int i = 0; i < va.rows(); ++i)
        for (int j = 0; j < cols; ++j) n.val(i, j) = va(i, 0);
    return push(std::move(n), "bcast_col");
}

NodeId Tape::log_softmax_rows(NodeId logits) {
    const Tensor& v = value(logits);
    Tensor mx(v.rows(), 1);
    for (int i = 0; i < v.rows(); ++i) {
        double m = v(i, 0);
        for (int j = 1; j < v.cols(); ++j) m = std::max(m, v(i, j));
        mx(i, 0) = m;
    }
    NodeId shifted = sub(logits, bcast_col(constant(std::move(mx)), v.cols()));
    NodeId lse = log(rowsum(exp(shifted)));
    return sub(shifted, bcast_col(lse, v.cols()));
}

// ===== reverse pass =====

namespace {

// Mask constants for the piecewise linear ops: captured from the forward
// value, constant under further differentiation.
Tensor relu_mask(const Tensor& x, double neg_slope) {
    Tensor m(x.rows(), x.cols());
    for (size_t i = 0; i < x.size(); ++i) m.at(i) = x.at(i) > 0.0 ? 1.0 : neg_slope;
    return m;
}

Tensor sign_mask(const Tensor& x) {
    Tensor m(x.rows(), x.cols());
    for (size_t i = 0; i < x.size(); ++i) m.at(i) = x.at(i) > 0.0 ? 1.0 : (x.at(i) < 0.0 ? -1.0 : 0.0);
    return m;
}

struct Accumulator {
    std::vector<int32_t> adj;  // node id of accumulated adjoint, -1 if none
    Tape* t;

    void add_to(int32_t parent, NodeId contrib) {
        int32_t& slot = adj[parent];
        if (slot < 0)
            slot = contrib.v;
        else
            slot = t->add(NodeId{slot}, contrib).v;
    }
};

}  // namespace

std::vector<NodeId> grad(Tape& t, NodeId output, std::span<const NodeId> wrt) {
    const Node& out = t.node(output);
    if (!out.val.is_scalar())
        throw Error("grad: output must be scalar-shaped, got " + out.val.shape_str());
    for (NodeId w : wrt) (void)t.node(w);  // validate ids before growing the tape

    Accumulator acc{std::vector<int32_t>(size_t(output.v) + 1, -1), &t};
    acc.adj[output.v] = t.constant_scalar(1.0).v;

    for (int32_t i = output.v; i >= 0; --i) {
        if (acc.adj[i] < 0) continue;
        const Node& n = t.node(NodeId{i});
        const NodeId d{acc.adj[i]};
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::add:
                acc.add_to(n.a, d);
                acc.add_to(n.b, d);
                break;
            case Op::sub:
                acc.add_to(n.a, d);
                acc.add_to(n.b, t.neg(d));
                break;
            case Op::mul:
                acc.add_to(n.a, t.mul(d, NodeId{n.b}));
                acc.add_to(n.b, t.mul(d, NodeId{n.a}));
                break;
            case Op::inv: {
                // y = 1/x, dy/dx = -y^2; reuse the forward node to stay differentiable
                NodeId y{i};
                acc.add_to(n.a, t.neg(t.mul(d, t.mul(y, y))));
                break;
            }
            case Op::scale:
                acc.add_to(n.a, t.scale(d, n.c));
                break;
            case Op::shift:
                acc.add_to(n.a, d);
                break;
            case Op::matmul: {
                const NodeId A{n.a}, B{n.b};
                if (!n.ta && !n.tb) {
                    acc.add_to(n.a, t.matmul(d, B, false, true));
                    acc.add_to(n.b, t.matmul(A, d, true, false));
                } else if (n.ta && !n.tb) {
                    acc.add_to(n.a, t.matmul(B, d, false, true));
                    acc.add_to(n.b, t.matmul(A, d, false, false));
                } else if (!n.ta && n.tb) {
                    acc.add_to(n.a, t.matmul(d, B, false, false));
                    acc.add_to(n.b, t.matmul(d, A, true, false));
                } else {
                    acc.add_to(n.a, t.matmul(B, d, true, true));
                    acc.add_to(n.b, t.matmul(d, A, true, true));
                }
                break;
            }
            case Op::relu:
                acc.add_to(n.a, t.mul(d, t.constant(relu_mask(t.node(NodeId{n.a}).val, 0.0))));
                break;
            case Op::leaky_relu:
                acc.add_to(n.a, t.mul(d, t.constant(relu_mask(t.node(NodeId{n.a}).val, n.c))));
                break;
            case Op::tanh: {
                NodeId y{i};
                NodeId one = t.constant(Tensor::ones(n.val.rows(), n.val.cols()));
                acc.add_to(n.a, t.mul(d, t.sub(one, t.mul(y, y))));
                break;
            }
            case Op::sigmoid: {
                NodeId y{i};
                NodeId one = t.constant(Tensor::ones(n.val.rows(), n.val.cols()));
                acc.add_to(n.a, t.mul(d, t.mul(y, t.sub(one, y))));
                break;
            }
            case Op::exp: {
                NodeId y{i};
                acc.add_to(n.a, t.mul(d, y));
                break;
            }
            case Op::log:
                acc.add_to(n.a, t.mul(d, t.inv(NodeId{n.a})));
                break;
            case Op::sqrt: {
                NodeId y{i};
                acc.add_to(n.a, t.mul(d, t.scale(t.inv(y), 0.5)));
                break;
            }
            case Op::abs:
                acc.add_to(n.a, t.mul(d, t.constant(sign_mask(t.node(NodeId{n.a}).val))));
                break;
            case Op::sin:
                acc.add_to(n.a, t.mul(d, t.cos(NodeId{n.a})));
                break;
            case Op::cos:
                acc.add_to(n.a, t.neg(t.mul(d, t.sin(NodeId{n.a}))));
                break;
            case Op::sum: {
                const Tensor& pv = t.node(NodeId{n.a}).val;
                acc.add_to(n.a, t.bcast_full(d, pv.rows(), pv.cols()));
                break;
            }
            case Op::rowsum: {
                const Tensor& pv = t.node(NodeId{n.a}).val;
                acc.add_to(n.a, t.bcast_col(d, pv.cols()));
                break;
            }
            case Op::colsum: {
                const Tensor& pv = t.node(NodeId{n.a}).val;
                acc.add_to(n.a, t.bcast_row(d, pv.rows()));
                break;
            }
            case Op::bcast_full:
                acc.add_to(n.a, t.sum(d));
                break;
            case Op::bcast_row:
                acc.add_to(n.a, t.colsum(d));
                break;
            case Op::bcast_col:
                acc.add_to(n.a, t.rowsum(d));
                break;
        }
    }

    std::vector<NodeId> out_ids;
    out_ids.reserve(wrt.size());
    for (NodeId w : wrt) {
        if (w.v <= output.v && acc.adj[w.v] >= 0) {
            out_ids.push_back(NodeId{acc.adj[w.v]});
        } else {
            const Tensor& wv = t.node(w).val;
            out_ids.push_back(t.constant(Tensor::zeros(wv.rows(), wv.cols())));
        }
    }
    return out_ids;
}

NodeId grad(Tape& t, NodeId output, NodeId wrt) {
    const NodeId ids[1] = {wrt};
    return grad(t, output, std::span<const NodeId>(ids, 1)).front();
}

NodeId hvp(Tape& t, NodeId output, NodeId x, const Tensor& v) {
    const Tensor& xv = t.value(x);
    if (!xv.same_shape(v))
        throw Error("hvp: direction shape " + v.shape_str() + " does not match x " + xv.shape_str());
    NodeId g = grad(t, output, x);
    NodeId s = t.dot(g, t.constant(v));
    return grad(t, s, x);
}

}  // namespace sobolev::ad
