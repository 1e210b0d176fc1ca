#pragma once

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bitext/rng.hpp"
#include "bitext/tensor.hpp"

namespace bitext::ad {

enum class OpKind : uint8_t {
    Leaf,
    Add,
    Sub,
    Mul,
    ScalarMul,
    MatMul,
    Transpose,
    Tanh,
    Sigmoid,
    Relu,
    Softmax,
    LogSoftmax,
    CrossEntropy,
    Concat,
    Slice,
    PadSlice,
    Mean,
    Sum,
    Conv1d,
    Conv1dInputGrad,
    Conv1dKernelGrad,
    GaussianNoise,
    SoftmaxVjp,
    LogSoftmaxVjp,
    EmbedLookup,
    EmbedScatter,
    Reciprocal,
    Sqrt,
    Reshape,
};

const char* op_name(OpKind k);

class Graph;

// Lightweight handle to a graph node.
struct Var {
    Graph* g = nullptr;
    int id = -1;
    bool valid() const { return g != nullptr && id >= 0; }
};

struct Node {
    OpKind kind = OpKind::Leaf;
    std::vector<int> inputs;
    Tensor value;
    bool requires_grad = false;
    double scalar = 0.0;        // ScalarMul factor
    int ax = 0, start = 0, len = 0; // Slice/PadSlice/Concat geometry
    std::vector<int> ids;       // CrossEntropy targets, EmbedLookup ids
    Tensor saved;               // CrossEntropy softmax rows
};

// Gradient values for requires_grad leaves after backward().
class GradMap {
public:
    GradMap() = default;
    GradMap(Graph* g, std::unordered_map<int, int> adjoints) : g_(g), adjoints_(std::move(adjoints)) {}

    // Leaf gradient; zero tensor of the leaf's shape when the leaf is not
    // reachable from the loss.
    Tensor grad(Var leaf) const;
    bool has(Var leaf) const { return adjoints_.count(leaf.id) > 0; }

private:
    Graph* g_ = nullptr;
    std::unordered_map<int, int> adjoints_;
};

// Append-only dynamic computation graph with eager values. Inputs of a node
// always precede it, so reverse id order is a reverse topological order.
// Single-threaded per graph; nodes are immutable once appended.
class Graph {
public:
    Var leaf(Tensor value, bool requires_grad = false);
    Var constant(Tensor value) { return leaf(std::move(value), false); }
    Var constant_scalar(double v) { return leaf(Tensor::scalar_of(v), false); }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Node& node(int id) const { return nodes_[id]; }
    size_t size() const { return nodes_.size(); }

    // Reverse-mode gradients of a scalar loss for every requires_grad leaf.
    GradMap backward(Var loss);

    // Differentiable gradient of a scalar output w.r.t. one tensor: the
    // returned node's value is d(output)/d(wrt) and further backward calls
    // through it produce second-order terms. Only the restricted op subset
    // may appear between wrt/parameters and output.
    Var grad_node(Var output, Var wrt);

    // d(output)/d(wrt) assembled into a single differentiable L2-norm node.
    Var grad_norm(Var output, Var wrt);

    // Every appended op value is checked for NaN/Inf when set; on by default
    // in debug builds (slow).
#ifdef NDEBUG
    bool check_finite = false;
#else
    bool check_finite = true;
#endif

    friend class GradMap;

    // -- op constructors (used via the free functions below) --
    Var append(Node n);
    Var apply_unary(OpKind k, Var x);
    Var apply_binary(OpKind k, Var a, Var b);

private:
    // deque: references to existing nodes stay valid while backward appends
    // gradient nodes
    std::deque<Node> nodes_;

    // Adjoint node per node id for nodes <= loss id; -1 where absent.
    std::vector<int> build_adjoints(int loss_id);
    void check_second_order_ops(int output_id) const;
};

// Elementwise ops accept equal shapes, a scalar (1-element) operand, or a
// 1 x N row against an M x N matrix.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scalar_mul(Var a, double c);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);
Var softmax(Var x);      // last axis; 1-D or 2-D
Var log_softmax(Var x);  // last axis; 1-D or 2-D
Var cross_entropy(Var logits, const std::vector<int>& targets); // mean over rows
Var concat(const std::vector<Var>& parts, int axis);
Var slice(Var x, int axis, int start, int len);
Var mean(Var x);
Var sum(Var x);
Var l2_norm(Var x); // sqrt(sum(x*x)), composed from primitives
Var conv1d(Var signal, Var kernels); // same padding, odd kernel width
Var gaussian_noise_add(Var x, double sigma, Rng& rng);
Var embed_lookup(Var table, const std::vector<int>& ids);
Var reciprocal(Var x);
Var sqrt(Var x);
Var reshape(Var x, std::vector<int> new_shape);

// Max over coordinates of |analytic - central difference| / max(1, |central|)
// for a scalar-valued graph function. The analytic side runs this library's
// backward; the differences re-evaluate f at perturbed inputs.
double finite_diff_check(const std::function<Var(Graph&, Var)>& f, const Tensor& x, double eps);

} // namespace bitext::ad
