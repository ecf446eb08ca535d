#pragma once

#include "sobolev/tensor.hpp"

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace sobolev::ad {

// Reverse-mode automatic differentiation on a growing tape of array-valued
// nodes. Values are computed eagerly when a node is recorded, so reading a
// value never re-evaluates anything.
//
// The one property the rest of the library leans on: grad() emits its
// backward pass as ordinary tape nodes, so a gradient is itself a
// differentiable quantity. Calling grad() on an expression built from a
// previous grad() yields exact higher-order derivatives (and hvp() is just
// that composition). Nonsmooth activations (relu, leaky_relu, abs) use a
// fixed mask captured at the forward value; the mask is a constant under
// further differentiation, which makes second derivatives of piecewise
// linear networks identically zero rather than undefined.

enum class Op : uint8_t {
    leaf,       // variable or constant; no parents
    add,        // a + b, same shape
    sub,        // a - b, same shape
    mul,        // elementwise a * b, same shape
    inv,        // elementwise 1 / a
    scale,      // c * a
    shift,      // a + c
    matmul,     // op(a) * op(b), transpose flags in the node
    relu,       // max(a, 0)
    leaky_relu, // a > 0 ? a : c*a
    tanh,
    sigmoid,
    exp,
    log,
    sqrt,
    abs,
    sin,
    cos,
    sum,        // all elements -> 1x1
    rowsum,     // (n x d) -> (n x 1)
    colsum,     // (n x d) -> (1 x d)
    bcast_full, // (1 x 1) -> (r x c)
    bcast_row,  // (1 x d) -> (r x d)
    bcast_col,  // (n x 1) -> (n x c)
};

struct NodeId {
    int32_t v = -1;
    bool valid() const { return v >= 0; }
};

struct Node {
    Op op = Op::leaf;
    int32_t a = -1;     // first parent
    int32_t b = -1;     // second parent
    double c = 0.0;     // scalar payload (scale factor, shift, leaky slope)
    bool ta = false;    // matmul: transpose first operand
    bool tb = false;    // matmul: transpose second operand
    Tensor val;
};

class Tape {
public:
    // Terminal nodes. leaf() and constant() are mechanically identical;
    // the distinction is for the reader (parameters vs baked-in data).
    NodeId leaf(Tensor v);
    NodeId constant(Tensor v);
    NodeId constant_scalar(double v) { return constant(Tensor::scalar(v)); }

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId inv(NodeId a);
    NodeId scale(NodeId a, double c);
    NodeId shift(NodeId a, double c);
    NodeId neg(NodeId a) { return scale(a, -1.0); }
    NodeId matmul(NodeId a, NodeId b, bool ta = false, bool tb = false);
    NodeId relu(NodeId a);
    NodeId leaky_relu(NodeId a, double slope);
    NodeId tanh(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId exp(NodeId a);
    NodeId log(NodeId a);
    NodeId sqrt(NodeId a);
    NodeId abs(NodeId a);
    NodeId sin(NodeId a);
    NodeId cos(NodeId a);
    NodeId sum(NodeId a);
    NodeId rowsum(NodeId a);
    NodeId colsum(NodeId a);
    NodeId bcast_full(NodeId a, int rows, int cols);
    NodeId bcast_row(NodeId a, int rows);
    NodeId bcast_col(NodeId a, int cols);

    // Composites (no ops of their own).
    NodeId dot(NodeId a, NodeId b) { return sum(mul(a, b)); }
    NodeId square(NodeId a) { return mul(a, a); }
    // Row-wise log-softmax, numerically stabilised by subtracting a detached
    // per-row max. The shift cancels analytically, so derivatives of any
    // order are unaffected by the detachment.
    NodeId log_softmax_rows(NodeId logits);

    // References stay valid while the node lives; pushes never move nodes,
    // only rollback past the node invalidates.
    const Tensor& value(NodeId id) const { return node(id).val; }
    const Node& node(NodeId id) const;
    size_t size() const { return nodes_.size(); }

    // Checkpointing: mark() takes a cheap snapshot of the tape length,
    // rollback() discards everything recorded after it. Values of retained
    // nodes are immutable, so a rolled-back tape replays bit-identically.
    size_t mark() const { return nodes_.size(); }
    void rollback(size_t mark);

    // Eager sanity check for NaN/Inf escaping an op's domain. On by default;
    // benchmarks may switch it off, experiments keep it on.
    void set_check_finite(bool on) { check_finite_ = on; }
    bool check_finite() const { return check_finite_; }

private:
    NodeId push(Node n, const char* opname);
    NodeId binary_same_shape(Op op, NodeId a, NodeId b, const char* opname);
    NodeId map_unary(Op op, NodeId a, double c, const char* opname);

    // A deque keeps node (and value) references stable across pushes;
    // value() references survive until their node is rolled back.
    std::deque<Node> nodes_;
    bool check_finite_ = true;
};

// Reverse pass from a scalar output. Returns one gradient node per entry of
// `wrt`, shaped like the corresponding input. A `wrt` node the output does
// not depend on yields a zero constant node (not an error): the derivative
// of a function along a direction it ignores is zero, and for piecewise
// linear networks this is exactly how second derivatives vanish.
std::vector<NodeId> grad(Tape& t, NodeId output, std::span<const NodeId> wrt);
NodeId grad(Tape& t, NodeId output, NodeId wrt);

// Hessian-vector product d/dx <grad_x(output), v> via double reverse pass.
NodeId hvp(Tape& t, NodeId output, NodeId x, const Tensor& v);

}  // namespace sobolev::ad
