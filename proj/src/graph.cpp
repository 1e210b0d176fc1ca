#include "bitext/graph.hpp"

#include <algorithm>
#include <cmath>

#include "bitext/kernels.hpp"

namespace bitext::ad {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::ScalarMul: return "scalar_mul";
        case OpKind::MatMul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::Tanh: return "tanh";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Relu: return "relu";
        case OpKind::Softmax: return "softmax";
        case OpKind::LogSoftmax: return "log_softmax";
        case OpKind::CrossEntropy: return "cross_entropy";
        case OpKind::Concat: return "concat";
        case OpKind::Slice: return "slice";
        case OpKind::PadSlice: return "pad_slice";
        case OpKind::Mean: return "mean";
        case OpKind::Sum: return "sum";
        case OpKind::Conv1d: return "conv1d";
        case OpKind::Conv1dInputGrad: return "conv1d_input_grad";
        case OpKind::Conv1dKernelGrad: return "conv1d_kernel_grad";
        case OpKind::GaussianNoise: return "gaussian_noise_add";
        case OpKind::SoftmaxVjp: return "softmax_vjp";
        case OpKind::LogSoftmaxVjp: return "log_softmax_vjp";
        case OpKind::EmbedLookup: return "embed_lookup";
        case OpKind::EmbedScatter: return "embed_scatter";
        case OpKind::Reciprocal: return "reciprocal";
        case OpKind::Sqrt: return "sqrt";
        case OpKind::Reshape: return "reshape";
    }
    return "?";
}

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw TensorError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const std::string& why) {
    throw TensorError(std::string(op) + ": " + why + " (got " + a.shape_str() + ")");
}

enum class Bc { None, AScalar, BScalar, ARow, BRow };

Bc classify_broadcast(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape == b.shape) return Bc::None;
    if (a.is_scalar()) return Bc::AScalar;
    if (b.is_scalar()) return Bc::BScalar;
    if (a.ndim() == 2 && b.ndim() == 2 && a.shape[1] == b.shape[1]) {
        if (a.shape[0] == 1) return Bc::ARow;
        if (b.shape[0] == 1) return Bc::BRow;
    }
    shape_error(op, a, b);
}

template <typename F>
Tensor elementwise_bc(const char* op, const Tensor& a, const Tensor& b, F f) {
    const Bc bc = classify_broadcast(op, a, b);
    const Tensor& big = (bc == Bc::AScalar || bc == Bc::ARow) ? b : a;
    Tensor out(big.shape);
    const int64_t n = out.numel();
    switch (bc) {
        case Bc::None:
            for (int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[i], b.data[i]);
            break;
        case Bc::AScalar:
            for (int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[0], b.data[i]);
            break;
        case Bc::BScalar:
            for (int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[i], b.data[0]);
            break;
        case Bc::ARow: {
            const int cols = big.shape[1];
            for (int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[i % cols], b.data[i]);
            break;
        }
        case Bc::BRow: {
            const int cols = big.shape[1];
            for (int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[i], b.data[i % cols]);
            break;
        }
    }
    return out;
}

void rows_cols(const Tensor& t, int& rows, int& cols) {
    if (t.ndim() == 1) {
        rows = 1;
        cols = t.shape[0];
    } else if (t.ndim() == 2) {
        rows = t.shape[0];
        cols = t.shape[1];
    } else {
        shape_error("softmax", t, "expected 1-D or 2-D");
    }
}

// softmax per row with max subtraction; out has the input's shape
Tensor softmax_rows(const Tensor& x) {
    int rows, cols;
    rows_cols(x, rows, cols);
    Tensor out(x.shape);
    for (int r = 0; r < rows; ++r) {
        const double* xi = x.data.data() + static_cast<int64_t>(r) * cols;
        double* oi = out.data.data() + static_cast<int64_t>(r) * cols;
        double mx = xi[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, xi[j]);
        double z = 0.0;
        for (int j = 0; j < cols; ++j) {
            oi[j] = std::exp(xi[j] - mx);
            z += oi[j];
        }
        for (int j = 0; j < cols; ++j) oi[j] /= z;
    }
    return out;
}

Tensor log_softmax_rows(const Tensor& x) {
    int rows, cols;
    rows_cols(x, rows, cols);
    Tensor out(x.shape);
    for (int r = 0; r < rows; ++r) {
        const double* xi = x.data.data() + static_cast<int64_t>(r) * cols;
        double* oi = out.data.data() + static_cast<int64_t>(r) * cols;
        double mx = xi[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, xi[j]);
        double z = 0.0;
        for (int j = 0; j < cols; ++j) z += std::exp(xi[j] - mx);
        const double lz = mx + std::log(z);
        for (int j = 0; j < cols; ++j) oi[j] = xi[j] - lz;
    }
    return out;
}

void check_conv_shapes(const char* op, const Tensor& signal, const Tensor& kernels) {
    if (signal.ndim() != 2 || kernels.ndim() != 3)
        throw TensorError(std::string(op) + ": expected 2-D signal and 3-D kernels, got " +
                          signal.shape_str() + " and " + kernels.shape_str());
    if (kernels.shape[0] % 2 == 0)
        throw TensorError(std::string(op) + ": kernel width must be odd, got " +
                          std::to_string(kernels.shape[0]));
}

} // namespace

Var Graph::append(Node n) {
    if (n.kind != OpKind::Leaf) {
        n.requires_grad = false;
        for (int in : n.inputs)
            if (nodes_[in].requires_grad) n.requires_grad = true;
        if (check_finite && !all_finite(n.value))
            throw TensorError(std::string(op_name(n.kind)) + ": produced non-finite values");
    }
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.kind = OpKind::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

namespace {

Graph* same_graph(Var a, Var b) {
    if (a.g != b.g) throw TensorError("op: operands belong to different graphs");
    return a.g;
}

Var binary_elementwise(OpKind k, const char* name, Var a, Var b) {
    Graph* g = same_graph(a, b);
    const Tensor& ta = g->value(a);
    const Tensor& tb = g->value(b);
    Node n;
    n.kind = k;
    n.inputs = {a.id, b.id};
    switch (k) {
        case OpKind::Add: n.value = elementwise_bc(name, ta, tb, [](double x, double y) { return x + y; }); break;
        case OpKind::Sub: n.value = elementwise_bc(name, ta, tb, [](double x, double y) { return x - y; }); break;
        case OpKind::Mul: n.value = elementwise_bc(name, ta, tb, [](double x, double y) { return x * y; }); break;
        default: throw TensorError("internal: bad elementwise kind");
    }
    return g->append(std::move(n));
}

} // namespace

Var add(Var a, Var b) { return binary_elementwise(OpKind::Add, "add", a, b); }
Var sub(Var a, Var b) { return binary_elementwise(OpKind::Sub, "sub", a, b); }
Var mul(Var a, Var b) { return binary_elementwise(OpKind::Mul, "mul", a, b); }

Var scalar_mul(Var a, double c) {
    Graph* g = a.g;
    Node n;
    n.kind = OpKind::ScalarMul;
    n.inputs = {a.id};
    n.scalar = c;
    n.value = g->value(a);
    for (double& x : n.value.data) x *= c;
    return g->append(std::move(n));
}

Var matmul(Var a, Var b) {
    Graph* g = same_graph(a, b);
    const Tensor& ta = g->value(a);
    const Tensor& tb = g->value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.shape[1] != tb.shape[0]) shape_error("matmul", ta, tb);
    Node n;
    n.kind = OpKind::MatMul;
    n.inputs = {a.id, b.id};
    n.value = Tensor({ta.shape[0], tb.shape[1]});
    kernels::matmul(ta.data.data(), tb.data.data(), n.value.data.data(), ta.shape[0], ta.shape[1], tb.shape[1]);
    return g->append(std::move(n));
}

Var transpose(Var a) {
    Graph* g = a.g;
    const Tensor& t = g->value(a);
    if (t.ndim() != 2) shape_error("transpose", t, "expected 2-D");
    Node n;
    n.kind = OpKind::Transpose;
    n.inputs = {a.id};
    n.value = Tensor({t.shape[1], t.shape[0]});
    for (int i = 0; i < t.shape[0]; ++i)
        for (int j = 0; j < t.shape[1]; ++j) n.value.at(j, i) = t.at(i, j);
    return g->append(std::move(n));
}

namespace {

template <typename F>
Var unary_pointwise(OpKind k, Var x, F f) {
    Graph* g = x.g;
    Node n;
    n.kind = k;
    n.inputs = {x.id};
    n.value = g->value(x);
    for (double& v : n.value.data) v = f(v);
    return g->append(std::move(n));
}

} // namespace

Var tanh(Var x) { return unary_pointwise(OpKind::Tanh, x, [](double v) { return std::tanh(v); }); }
Var sigmoid(Var x) { return unary_pointwise(OpKind::Sigmoid, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }); }
Var relu(Var x) { return unary_pointwise(OpKind::Relu, x, [](double v) { return v > 0.0 ? v : 0.0; }); }
Var reciprocal(Var x) { return unary_pointwise(OpKind::Reciprocal, x, [](double v) { return 1.0 / v; }); }
Var sqrt(Var x) { return unary_pointwise(OpKind::Sqrt, x, [](double v) { return std::sqrt(v); }); }

Var softmax(Var x) {
    Graph* g = x.g;
    Node n;
    n.kind = OpKind::Softmax;
    n.inputs = {x.id};
    n.value = softmax_rows(g->value(x));
    return g->append(std::move(n));
}

Var log_softmax(Var x) {
    Graph* g = x.g;
    Node n;
    n.kind = OpKind::LogSoftmax;
    n.inputs = {x.id};
    n.value = log_softmax_rows(g->value(x));
    return g->append(std::move(n));
}

Var cross_entropy(Var logits, const std::vector<int>& targets) {
    Graph* g = logits.g;
    const Tensor& t = g->value(logits);
    if (t.ndim() != 2) shape_error("cross_entropy", t, "expected 2-D logits");
    const int rows = t.shape[0], cols = t.shape[1];
    if (static_cast<int>(targets.size()) != rows)
        throw TensorError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                          std::to_string(rows) + " logit rows");
    Node n;
    n.kind = OpKind::CrossEntropy;
    n.inputs = {logits.id};
    n.ids = targets;
    n.saved = softmax_rows(t);
    double loss = 0.0;
    for (int r = 0; r < rows; ++r) {
        const int tid = targets[r];
        if (tid < 0 || tid >= cols)
            throw TensorError("cross_entropy: target id " + std::to_string(tid) + " outside vocab of " +
                              std::to_string(cols));
        loss -= std::log(std::max(n.saved.at(r, tid), 1e-300));
    }
    n.value = Tensor::scalar_of(loss / rows);
    return g->append(std::move(n));
}

Var concat(const std::vector<Var>& parts, int axis) {
    if (parts.empty()) throw TensorError("concat: no inputs");
    Graph* g = parts[0].g;
    const Tensor& first = g->value(parts[0]);
    const int nd = first.ndim();
    if (nd == 1 && axis != 0) shape_error("concat", first, "1-D concat must use axis 0");
    if (nd == 2 && axis != 0 && axis != 1) shape_error("concat", first, "axis must be 0 or 1");
    if (nd > 2) shape_error("concat", first, "expected 1-D or 2-D");

    Node n;
    n.kind = OpKind::Concat;
    n.ax = axis;
    int total = 0;
    for (Var p : parts) {
        same_graph(parts[0], p);
        const Tensor& tp = g->value(p);
        if (tp.ndim() != nd) shape_error("concat", first, tp);
        if (nd == 2 && tp.shape[1 - axis] != first.shape[1 - axis]) shape_error("concat", first, tp);
        n.inputs.push_back(p.id);
        total += tp.shape[axis];
    }
    std::vector<int> oshape = first.shape;
    oshape[axis] = total;
    n.value = Tensor(oshape);
    if (nd == 1 || axis == 0) {
        double* dst = n.value.data.data();
        for (Var p : parts) {
            const Tensor& tp = g->value(p);
            std::copy(tp.data.begin(), tp.data.end(), dst);
            dst += tp.numel();
        }
    } else {
        const int rows = first.shape[0];
        int col0 = 0;
        for (Var p : parts) {
            const Tensor& tp = g->value(p);
            const int pc = tp.shape[1];
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < pc; ++c) n.value.at(r, col0 + c) = tp.at(r, c);
            col0 += pc;
        }
    }
    return g->append(std::move(n));
}

Var slice(Var x, int axis, int start, int len) {
    Graph* g = x.g;
    const Tensor& t = g->value(x);
    const int nd = t.ndim();
    if (nd != 1 && nd != 2) shape_error("slice", t, "expected 1-D or 2-D");
    if (nd == 1 && axis != 0) shape_error("slice", t, "1-D slice must use axis 0");
    if (axis < 0 || axis >= nd || start < 0 || len < 1 || start + len > t.shape[axis])
        throw TensorError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
                          ") out of bounds for axis " + std::to_string(axis) + " of " + t.shape_str());
    Node n;
    n.kind = OpKind::Slice;
    n.inputs = {x.id};
    n.ax = axis;
    n.start = start;
    n.len = len;
    std::vector<int> oshape = t.shape;
    oshape[axis] = len;
    n.value = Tensor(oshape);
    if (nd == 1 || axis == 0) {
        const int cols = nd == 1 ? 1 : t.shape[1];
        std::copy(t.data.begin() + static_cast<int64_t>(start) * cols,
                  t.data.begin() + static_cast<int64_t>(start + len) * cols, n.value.data.begin());
    } else {
        for (int r = 0; r < t.shape[0]; ++r)
            for (int c = 0; c < len; ++c) n.value.at(r, c) = t.at(r, start + c);
    }
    return g->append(std::move(n));
}

namespace {

// Inverse of slice: place x into a zero tensor whose axis has size full_len.
Var pad_slice(Var x, int axis, int start, int full_len) {
    Graph* g = x.g;
    const Tensor& t = g->value(x);
    Node n;
    n.kind = OpKind::PadSlice;
    n.inputs = {x.id};
    n.ax = axis;
    n.start = start;
    n.len = full_len;
    std::vector<int> oshape = t.shape;
    oshape[axis] = full_len;
    n.value = Tensor(oshape);
    const int nd = t.ndim();
    if (nd == 1 || axis == 0) {
        const int cols = nd == 1 ? 1 : t.shape[1];
        std::copy(t.data.begin(), t.data.end(), n.value.data.begin() + static_cast<int64_t>(start) * cols);
    } else {
        for (int r = 0; r < t.shape[0]; ++r)
            for (int c = 0; c < t.shape[1]; ++c) n.value.at(r, start + c) = t.at(r, c);
    }
    return g->append(std::move(n));
}

} // namespace

Var mean(Var x) {
    Graph* g = x.g;
    const Tensor& t = g->value(x);
    double s = 0.0;
    for (double v : t.data) s += v;
    Node n;
    n.kind = OpKind::Mean;
    n.inputs = {x.id};
    n.value = Tensor::scalar_of(s / static_cast<double>(t.numel()));
    return g->append(std::move(n));
}

Var sum(Var x) {
    Graph* g = x.g;
    const Tensor& t = g->value(x);
    double s = 0.0;
    for (double v : t.data) s += v;
    Node n;
    n.kind = OpKind::Sum;
    n.inputs = {x.id};
    n.value = Tensor::scalar_of(s);
    return g->append(std::move(n));
}

Var l2_norm(Var x) { return sqrt(sum(mul(x, x))); }

Var conv1d(Var signal, Var kernels) {
    Graph* g = same_graph(signal, kernels);
    const Tensor& ts = g->value(signal);
    const Tensor& tk = g->value(kernels);
    check_conv_shapes("conv1d", ts, tk);
    if (ts.shape[1] != tk.shape[1]) shape_error("conv1d", ts, tk);
    Node n;
    n.kind = OpKind::Conv1d;
    n.inputs = {signal.id, kernels.id};
    n.value = Tensor({ts.shape[0], tk.shape[2]});
    kernels::conv1d(ts.data.data(), tk.data.data(), n.value.data.data(), ts.shape[0], tk.shape[1], tk.shape[2],
                    tk.shape[0]);
    return g->append(std::move(n));
}

namespace {

Var conv1d_input_grad(Var grad_out, Var kernels) {
    Graph* g = same_graph(grad_out, kernels);
    const Tensor& tg = g->value(grad_out);
    const Tensor& tk = g->value(kernels);
    check_conv_shapes("conv1d_input_grad", tg, tk);
    if (tg.shape[1] != tk.shape[2]) shape_error("conv1d_input_grad", tg, tk);
    Node n;
    n.kind = OpKind::Conv1dInputGrad;
    n.inputs = {grad_out.id, kernels.id};
    n.value = Tensor({tg.shape[0], tk.shape[1]});
    kernels::conv1d_input_grad(tg.data.data(), tk.data.data(), n.value.data.data(), tg.shape[0], tk.shape[1],
                               tk.shape[2], tk.shape[0]);
    return g->append(std::move(n));
}

Var conv1d_kernel_grad(Var signal, Var grad_out, int k_w) {
    Graph* g = same_graph(signal, grad_out);
    const Tensor& ts = g->value(signal);
    const Tensor& tg = g->value(grad_out);
    if (ts.ndim() != 2 || tg.ndim() != 2 || ts.shape[0] != tg.shape[0])
        shape_error("conv1d_kernel_grad", ts, tg);
    Node n;
    n.kind = OpKind::Conv1dKernelGrad;
    n.inputs = {signal.id, grad_out.id};
    n.len = k_w;
    n.value = Tensor({k_w, ts.shape[1], tg.shape[1]});
    kernels::conv1d_kernel_grad(ts.data.data(), tg.data.data(), n.value.data.data(), ts.shape[0], ts.shape[1],
                                tg.shape[1], k_w);
    return g->append(std::move(n));
}

} // namespace

Var gaussian_noise_add(Var x, double sigma, Rng& rng) {
    Graph* g = x.g;
    Node n;
    n.kind = OpKind::GaussianNoise;
    n.inputs = {x.id};
    n.scalar = sigma;
    n.value = g->value(x);
    for (double& v : n.value.data) v += rng.normal(0.0, sigma);
    return g->append(std::move(n));
}

Var embed_lookup(Var table, const std::vector<int>& ids) {
    Graph* g = table.g;
    const Tensor& t = g->value(table);
    if (t.ndim() != 2) shape_error("embed_lookup", t, "expected 2-D table");
    if (ids.empty()) throw TensorError("embed_lookup: empty id list");
    Node n;
    n.kind = OpKind::EmbedLookup;
    n.inputs = {table.id};
    n.ids = ids;
    n.value = Tensor({static_cast<int>(ids.size()), t.shape[1]});
    for (size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= t.shape[0])
            throw TensorError("embed_lookup: id " + std::to_string(ids[r]) + " outside table of " +
                              std::to_string(t.shape[0]) + " rows");
        for (int c = 0; c < t.shape[1]; ++c) n.value.at(static_cast<int>(r), c) = t.at(ids[r], c);
    }
    return g->append(std::move(n));
}

namespace {

Var embed_scatter(Var grads, const std::vector<int>& ids, int table_rows) {
    Graph* g = grads.g;
    const Tensor& t = g->value(grads);
    Node n;
    n.kind = OpKind::EmbedScatter;
    n.inputs = {grads.id};
    n.ids = ids;
    n.len = table_rows;
    n.value = Tensor({table_rows, t.shape[1]});
    for (size_t r = 0; r < ids.size(); ++r)
        for (int c = 0; c < t.shape[1]; ++c) n.value.at(ids[r], c) += t.at(static_cast<int>(r), c);
    return g->append(std::move(n));
}

} // namespace

Var reshape(Var x, std::vector<int> new_shape) {
    Graph* g = x.g;
    const Tensor& t = g->value(x);
    if (Tensor::numel_of(new_shape) != t.numel())
        throw TensorError("reshape: cannot reshape " + t.shape_str() + " to " +
                          Tensor(new_shape).shape_str());
    Node n;
    n.kind = OpKind::Reshape;
    n.inputs = {x.id};
    n.value = Tensor(std::move(new_shape), t.data);
    return g->append(std::move(n));
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

Tensor GradMap::grad(Var leaf) const {
    auto it = adjoints_.find(leaf.id);
    if (it == adjoints_.end()) return Tensor::zeros(leaf.g->value(leaf).shape);
    return g_->value(Var{g_, it->second});
}

std::vector<int> Graph::build_adjoints(int loss_id) {
    std::vector<int> adj(loss_id + 1, -1);
    if (!nodes_[loss_id].requires_grad) return adj;

    std::vector<char> reachable(loss_id + 1, 0);
    reachable[loss_id] = 1;
    for (int id = loss_id; id >= 0; --id) {
        if (!reachable[id]) continue;
        for (int in : nodes_[id].inputs)
            if (nodes_[in].requires_grad) reachable[in] = 1;
    }

    auto var = [this](int id) { return Var{this, id}; };
    auto acc = [&](int input, Var contrib) {
        // adjoints always carry the exact shape of their node
        if (value(contrib).shape != nodes_[input].value.shape)
            contrib = reshape(contrib, nodes_[input].value.shape);
        adj[input] = adj[input] < 0 ? contrib.id : add(var(adj[input]), contrib).id;
    };
    // Reduce a full-output-shape gradient down to an operand's shape when the
    // operand was broadcast in the forward op.
    auto reduce_to = [&](Var gfull, const Tensor& operand) -> Var {
        const Tensor& tg = value(gfull);
        if (tg.shape == operand.shape) return gfull;
        if (operand.is_scalar()) {
            Var s = sum(gfull);
            if (operand.ndim() == value(s).ndim()) return s;
            return reshape(s, operand.shape);
        }
        // 1 x N row against M x N: column sums via ones(1 x M) * g
        Var ones = constant(Tensor::full({1, tg.shape[0]}, 1.0));
        return matmul(ones, gfull);
    };

    adj[loss_id] = constant(Tensor::scalar_of(1.0)).id;

    for (int id = loss_id; id >= 0; --id) {
        if (!reachable[id] || adj[id] < 0) continue;
        const Node& n = nodes_[id];
        Var g = var(adj[id]);
        const auto& in = n.inputs;
        auto rg = [&](int k) { return nodes_[in[k]].requires_grad; };

        switch (n.kind) {
            case OpKind::Leaf:
                break;
            case OpKind::Add:
                if (rg(0)) acc(in[0], reduce_to(g, nodes_[in[0]].value));
                if (rg(1)) acc(in[1], reduce_to(g, nodes_[in[1]].value));
                break;
            case OpKind::Sub:
                if (rg(0)) acc(in[0], reduce_to(g, nodes_[in[0]].value));
                if (rg(1)) acc(in[1], scalar_mul(reduce_to(g, nodes_[in[1]].value), -1.0));
                break;
            case OpKind::Mul:
                if (rg(0)) acc(in[0], reduce_to(mul(g, var(in[1])), nodes_[in[0]].value));
                if (rg(1)) acc(in[1], reduce_to(mul(g, var(in[0])), nodes_[in[1]].value));
                break;
            case OpKind::ScalarMul:
                if (rg(0)) acc(in[0], scalar_mul(g, n.scalar));
                break;
            case OpKind::MatMul:
                if (rg(0)) acc(in[0], matmul(g, transpose(var(in[1]))));
                if (rg(1)) acc(in[1], matmul(transpose(var(in[0])), g));
                break;
            case OpKind::Transpose:
                if (rg(0)) acc(in[0], transpose(g));
                break;
            case OpKind::Tanh:
                if (rg(0)) {
                    Var y = var(id);
                    Var one = constant(Tensor::full(n.value.shape, 1.0));
                    acc(in[0], mul(g, sub(one, mul(y, y))));
                }
                break;
            case OpKind::Sigmoid:
                if (rg(0)) {
                    Var y = var(id);
                    Var one = constant(Tensor::full(n.value.shape, 1.0));
                    acc(in[0], mul(g, mul(y, sub(one, y))));
                }
                break;
            case OpKind::Relu:
                if (rg(0)) {
                    Tensor mask(n.value.shape);
                    const Tensor& x = nodes_[in[0]].value;
                    for (int64_t i = 0; i < mask.numel(); ++i) mask.data[i] = x.data[i] > 0.0 ? 1.0 : 0.0;
                    acc(in[0], mul(g, constant(std::move(mask))));
                }
                break;
            case OpKind::Softmax:
                if (rg(0)) {
                    Node v;
                    v.kind = OpKind::SoftmaxVjp;
                    v.inputs = {id, adj[id]};
                    const Tensor& y = n.value;
                    const Tensor& tg = value(g);
                    int rows, cols;
                    rows_cols(y, rows, cols);
                    v.value = Tensor(y.shape);
                    for (int r = 0; r < rows; ++r) {
                        double dot = 0.0;
                        for (int c = 0; c < cols; ++c)
                            dot += y.data[static_cast<int64_t>(r) * cols + c] * tg.data[static_cast<int64_t>(r) * cols + c];
                        for (int c = 0; c < cols; ++c) {
                            const int64_t i = static_cast<int64_t>(r) * cols + c;
                            v.value.data[i] = y.data[i] * (tg.data[i] - dot);
                        }
                    }
                    acc(in[0], append(std::move(v)));
                }
                break;
            case OpKind::LogSoftmax:
                if (rg(0)) {
                    Node v;
                    v.kind = OpKind::LogSoftmaxVjp;
                    v.inputs = {id, adj[id]};
                    const Tensor& y = n.value;
                    const Tensor& tg = value(g);
                    int rows, cols;
                    rows_cols(y, rows, cols);
                    v.value = Tensor(y.shape);
                    for (int r = 0; r < rows; ++r) {
                        double s = 0.0;
                        for (int c = 0; c < cols; ++c) s += tg.data[static_cast<int64_t>(r) * cols + c];
                        for (int c = 0; c < cols; ++c) {
                            const int64_t i = static_cast<int64_t>(r) * cols + c;
                            v.value.data[i] = tg.data[i] - std::exp(y.data[i]) * s;
                        }
                    }
                    acc(in[0], append(std::move(v)));
                }
                break;
            case OpKind::CrossEntropy:
                if (rg(0)) {
                    const int rows = n.saved.shape[0];
                    Tensor c = n.saved;
                    for (int r = 0; r < rows; ++r) c.at(r, n.ids[r]) -= 1.0;
                    const double inv = 1.0 / rows;
                    for (double& x : c.data) x *= inv;
                    acc(in[0], mul(constant(std::move(c)), g));
                }
                break;
            case OpKind::Concat: {
                int off = 0;
                for (size_t k = 0; k < in.size(); ++k) {
                    const int part = nodes_[in[k]].value.ndim() == 1 ? nodes_[in[k]].value.shape[0]
                                                                     : nodes_[in[k]].value.shape[n.ax];
                    if (rg(k)) acc(in[k], slice(g, n.ax, off, part));
                    off += part;
                }
                break;
            }
            case OpKind::Slice:
                if (rg(0)) {
                    const Tensor& x = nodes_[in[0]].value;
                    acc(in[0], pad_slice(g, n.ax, n.start, x.shape[n.ax]));
                }
                break;
            case OpKind::PadSlice:
                if (rg(0)) {
                    const Tensor& x = nodes_[in[0]].value;
                    acc(in[0], slice(g, n.ax, n.start, x.shape[n.ax]));
                }
                break;
            case OpKind::Mean:
                if (rg(0)) {
                    const Tensor& x = nodes_[in[0]].value;
                    acc(in[0], mul(constant(Tensor::full(x.shape, 1.0 / static_cast<double>(x.numel()))), g));
                }
                break;
            case OpKind::Sum:
                if (rg(0)) {
                    const Tensor& x = nodes_[in[0]].value;
                    acc(in[0], mul(constant(Tensor::full(x.shape, 1.0)), g));
                }
                break;
            case OpKind::Conv1d:
                if (rg(0)) acc(in[0], conv1d_input_grad(g, var(in[1])));
                if (rg(1)) acc(in[1], conv1d_kernel_grad(var(in[0]), g, nodes_[in[1]].value.shape[0]));
                break;
            case OpKind::Conv1dInputGrad:
                // value = conv1d_input_grad(s, w); adjoint h flows back as
                // ds = conv1d(h, w), dw = conv1d_kernel_grad(h, s).
                if (rg(0)) acc(in[0], conv1d(g, var(in[1])));
                if (rg(1)) acc(in[1], conv1d_kernel_grad(g, var(in[0]), nodes_[in[1]].value.shape[0]));
                break;
            case OpKind::Conv1dKernelGrad:
                // value = conv1d_kernel_grad(x, s); adjoint q flows back as
                // dx = conv1d_input_grad(s, q), ds = conv1d(x, q).
                if (rg(0)) acc(in[0], conv1d_input_grad(var(in[1]), g));
                if (rg(1)) acc(in[1], conv1d(var(in[0]), g));
                break;
            case OpKind::GaussianNoise:
                if (rg(0)) acc(in[0], g);
                break;
            case OpKind::EmbedLookup:
                if (rg(0)) acc(in[0], embed_scatter(g, n.ids, nodes_[in[0]].value.shape[0]));
                break;
            case OpKind::Reciprocal:
                if (rg(0)) {
                    Var r = var(id);
                    acc(in[0], scalar_mul(mul(g, mul(r, r)), -1.0));
                }
                break;
            case OpKind::Sqrt:
                if (rg(0)) {
                    Var y = var(id);
                    acc(in[0], scalar_mul(mul(g, reciprocal(y)), 0.5));
                }
                break;
            case OpKind::Reshape:
                if (rg(0)) acc(in[0], reshape(g, nodes_[in[0]].value.shape));
                break;
            case OpKind::SoftmaxVjp:
            case OpKind::LogSoftmaxVjp:
            case OpKind::EmbedScatter:
                throw TensorError(std::string("backward: second-order differentiation through ") +
                                  op_name(n.kind) + " is not supported");
        }
    }
    return adj;
}

GradMap Graph::backward(Var loss) {
    if (!value(loss).is_scalar())
        throw TensorError("backward: loss must be scalar, got " + value(loss).shape_str());
    std::vector<int> adj = build_adjoints(loss.id);
    std::unordered_map<int, int> leaf_adjoints;
    for (int id = 0; id <= loss.id; ++id)
        if (nodes_[id].kind == OpKind::Leaf && nodes_[id].requires_grad && adj[id] >= 0)
            leaf_adjoints.emplace(id, adj[id]);
    return GradMap(this, std::move(leaf_adjoints));
}

Var Graph::grad_node(Var output, Var wrt) {
    if (!value(output).is_scalar())
        throw TensorError("grad_node: output must be scalar, got " + value(output).shape_str());
    if (!nodes_[wrt.id].requires_grad)
        throw TensorError("grad_node: wrt tensor does not require gradients");
    std::vector<int> adj = build_adjoints(output.id);
    if (wrt.id > output.id || adj[wrt.id] < 0) return constant(Tensor::zeros(value(wrt).shape));
    return Var{this, adj[wrt.id]};
}

void Graph::check_second_order_ops(int output_id) const {
    std::vector<char> reachable(output_id + 1, 0);
    reachable[output_id] = 1;
    for (int id = output_id; id >= 0; --id) {
        if (!reachable[id]) continue;
        const Node& n = nodes_[id];
        switch (n.kind) {
            case OpKind::Sigmoid:
            case OpKind::Softmax:
            case OpKind::LogSoftmax:
            case OpKind::CrossEntropy:
            case OpKind::SoftmaxVjp:
            case OpKind::LogSoftmaxVjp:
            case OpKind::EmbedLookup:
            case OpKind::EmbedScatter:
                throw TensorError(std::string("grad_norm: op ") + op_name(n.kind) +
                                  " is outside the double-differentiable subset");
            default:
                break;
        }
        for (int in : n.inputs)
            if (nodes_[in].requires_grad) reachable[in] = 1;
    }
}

Var Graph::grad_norm(Var output, Var wrt) {
    if (!value(output).is_scalar())
        throw TensorError("grad_norm: output must be scalar, got " + value(output).shape_str());
    check_second_order_ops(output.id);
    Var g = grad_node(output, wrt);
    return l2_norm(g);
}

double finite_diff_check(const std::function<Var(Graph&, Var)>& f, const Tensor& x, double eps) {
    if (eps <= 0.0) throw TensorError("finite_diff_check: eps must be positive");
    Graph g;
    g.check_finite = false; // non-finite values must propagate into the result
    Var xv = g.leaf(x, true);
    Var y = f(g, xv);
    if (!g.value(y).is_scalar())
        throw TensorError("finite_diff_check: f must return a scalar");
    Tensor analytic = g.backward(y).grad(xv);

    auto value_at = [&](const Tensor& p) {
        Graph gp;
        gp.check_finite = false;
        Var out = f(gp, gp.leaf(p, false));
        return gp.value(out).scalar();
    };

    double max_err = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) {
        Tensor xp = x;
        Tensor xm = x;
        xp.data[i] += eps;
        xm.data[i] -= eps;
        const double cd = (value_at(xp) - value_at(xm)) / (2.0 * eps);
        const double err = std::abs(analytic.data[i] - cd) / std::max(1.0, std::abs(cd));
        if (!(err <= max_err)) max_err = err; // NaN sticks
    }
    return max_err;
}

} // namespace bitext::ad
