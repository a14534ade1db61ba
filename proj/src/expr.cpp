// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/expr.hpp"

#include <Eigen/LU>

#include <atomic>
#include <cmath>
#include <unordered_set>

namespace dagwgan::ad {

namespace {

std::atomic<std::uint64_t> g_next_uid{1};
std::atomic<int> g_next_var_id{0};

std::string shape_str(const Expr& e) {
    return std::to_string(e.rows()) + "x" + std::to_string(e.cols());
}

Expr make(Op op, Eigen::Index rows, Eigen::Index cols, std::vector<NodePtr> inputs) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->rows = rows;
    n->cols = cols;
    n->inputs = std::move(inputs);
    n->uid = g_next_uid.fetch_add(1, std::memory_order_relaxed);
    return Expr(std::move(n));
}

Node* mutable_node(Expr& e) {
    // only used during construction, before the node is shared
    return const_cast<Node*>(e.node());
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

void require_same_shape(const Expr& a, const Expr& b, const char* what) {
    require(a.rows() == b.rows() && a.cols() == b.cols(),
            std::string(what) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

Expr unary(Op op, const Expr& a) {
    require(a.valid(), "null expression");
    return make(op, a.rows(), a.cols(), {a.ptr()});
}

constexpr double kLogClampFloor = 1e-12;
constexpr double kSolveRcondFloor = 1e-8;

} // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::kConst: return "constant";
        case Op::kVar: return "variable";
        case Op::kAdd: return "add";
        case Op::kSub: return "subtract";
        case Op::kMatMul: return "matmul";
        case Op::kHadamard: return "hadamard";
        case Op::kScalarMul: return "scalar-multiply";
        case Op::kTranspose: return "transpose";
        case Op::kMatPow: return "matrix-power";
        case Op::kSolve: return "linear-solve";
        case Op::kTrace: return "trace";
        case Op::kSum: return "sum";
        case Op::kMean: return "mean";
        case Op::kLeakyRelu: return "leaky-relu";
        case Op::kSigmoid: return "sigmoid";
        case Op::kTanh: return "tanh";
        case Op::kSin: return "sin";
        case Op::kCos: return "cos";
        case Op::kLog: return "log";
        case Op::kSoftmaxRows: return "softmax-rows";
        case Op::kSquare: return "elementwise-square";
        case Op::kL2NormRows: return "l2-norm-rows";
        case Op::kConcatCols: return "concat-cols";
        case Op::kDropout: return "dropout-apply";
        case Op::kLeakyReluGrad: return "leaky-relu-grad";
        case Op::kLogClamped: return "log-clamped";
        case Op::kLogClampedGrad: return "log-clamped-grad";
        case Op::kSafeRecip: return "safe-recip";
        case Op::kRowSums: return "row-sums";
        case Op::kColSums: return "col-sums";
        case Op::kBroadcastCol: return "broadcast-col";
        case Op::kBroadcastRow: return "broadcast-row";
        case Op::kBroadcastScalar: return "broadcast-scalar";
        case Op::kSliceCols: return "slice-cols";
        case Op::kPadCols: return "pad-cols";
        case Op::kMergeRows: return "merge-rows";
        case Op::kSplitRows: return "split-rows";
        case Op::kDimsToNodes: return "dims-to-nodes";
        case Op::kNodesToDims: return "nodes-to-dims";
        case Op::kTileRows: return "tile-rows";
        case Op::kTileSum: return "tile-sum";
    }
    return "?";
}

// ---- leaf constructors ----

Expr constant(Tensor value) {
    ensure_finite(value, "constant");
    Expr e = make(Op::kConst, value.rows(), value.cols(), {});
    mutable_node(e)->value = std::move(value);
    return e;
}

Expr constant_scalar(double value) {
    Tensor t(1, 1);
    t(0, 0) = value;
    return constant(std::move(t));
}

Expr zeros_const(Eigen::Index rows, Eigen::Index cols) {
    return constant(Tensor::Zero(rows, cols));
}

Expr ones_const(Eigen::Index rows, Eigen::Index cols) {
    return constant(Tensor::Ones(rows, cols));
}

Expr identity_const(Eigen::Index n) {
    return constant(Tensor::Identity(n, n));
}

Expr variable(std::string name, Eigen::Index rows, Eigen::Index cols) {
    require(rows >= 1 && cols >= 0, "variable '" + name + "': bad shape");
    Expr e = make(Op::kVar, rows, cols, {});
    Node* n = mutable_node(e);
    n->var_id = g_next_var_id.fetch_add(1, std::memory_order_relaxed);
    n->name = std::move(name);
    return e;
}

// ---- operations ----

Expr add(const Expr& a, const Expr& b) {
    require_same_shape(a, b, "add");
    return make(Op::kAdd, a.rows(), a.cols(), {a.ptr(), b.ptr()});
}

Expr sub(const Expr& a, const Expr& b) {
    require_same_shape(a, b, "subtract");
    return make(Op::kSub, a.rows(), a.cols(), {a.ptr(), b.ptr()});
}

Expr matmul(const Expr& a, const Expr& b) {
    require(a.cols() == b.rows(),
            "matmul: inner dimensions " + shape_str(a) + " * " + shape_str(b));
    return make(Op::kMatMul, a.rows(), b.cols(), {a.ptr(), b.ptr()});
}

Expr hadamard(const Expr& a, const Expr& b) {
    require_same_shape(a, b, "hadamard");
    return make(Op::kHadamard, a.rows(), a.cols(), {a.ptr(), b.ptr()});
}

Expr scalar_mul(const Expr& a, double c) {
    if (c == 1.0) return a;
    Expr e = unary(Op::kScalarMul, a);
    mutable_node(e)->scalar = c;
    return e;
}

Expr transpose(const Expr& a) {
    return make(Op::kTranspose, a.cols(), a.rows(), {a.ptr()});
}

Expr matpow(const Expr& a, long exponent) {
    require(a.rows() == a.cols(), "matrix-power: matrix not square, " + shape_str(a));
    require(exponent >= 0, "matrix-power: negative exponent");
    Expr e = unary(Op::kMatPow, a);
    mutable_node(e)->p0 = exponent;
    return e;
}

Expr linear_solve(const Expr& a, const Expr& b, std::string context) {
    require(a.rows() == a.cols(), "linear-solve: system matrix not square");
    require(a.cols() == b.rows(),
            "linear-solve: shapes " + shape_str(a) + " \\ " + shape_str(b));
    Expr e = make(Op::kSolve, b.rows(), b.cols(), {a.ptr(), b.ptr()});
    mutable_node(e)->name = std::move(context);
    return e;
}

Expr trace(const Expr& a) {
    require(a.rows() == a.cols(), "trace: matrix not square, " + shape_str(a));
    return make(Op::kTrace, 1, 1, {a.ptr()});
}

Expr sum(const Expr& a) { return make(Op::kSum, 1, 1, {a.ptr()}); }

Expr mean(const Expr& a) {
    require(a.rows() > 0 && a.cols() > 0, "mean of empty tensor");
    return make(Op::kMean, 1, 1, {a.ptr()});
}

Expr leaky_relu(const Expr& a, double slope) {
    Expr e = unary(Op::kLeakyRelu, a);
    mutable_node(e)->scalar = slope;
    return e;
}

Expr leaky_relu_grad(const Expr& a, double slope) {
    Expr e = unary(Op::kLeakyReluGrad, a);
    mutable_node(e)->scalar = slope;
    return e;
}

Expr sigmoid(const Expr& a) { return unary(Op::kSigmoid, a); }
Expr tanh_op(const Expr& a) { return unary(Op::kTanh, a); }
Expr sin_op(const Expr& a) { return unary(Op::kSin, a); }
Expr cos_op(const Expr& a) { return unary(Op::kCos, a); }
Expr log_op(const Expr& a) { return unary(Op::kLog, a); }
Expr log_clamped(const Expr& a) { return unary(Op::kLogClamped, a); }

namespace {
// derivative of log_clamped: 1/x above the clamp floor, 0 below
Expr log_clamped_grad(const Expr& a) { return unary(Op::kLogClampedGrad, a); }
} // namespace

Expr softmax_rows(const Expr& a) { return unary(Op::kSoftmaxRows, a); }

Expr square(const Expr& a) { return unary(Op::kSquare, a); }

Expr l2_norm_rows(const Expr& a) { return make(Op::kL2NormRows, a.rows(), 1, {a.ptr()}); }

Expr concat_cols(const Expr& a, const Expr& b) {
    require(a.rows() == b.rows(),
            "concat-cols: row counts differ, " + shape_str(a) + " vs " + shape_str(b));
    return make(Op::kConcatCols, a.rows(), a.cols() + b.cols(), {a.ptr(), b.ptr()});
}

Expr dropout_apply(const Expr& x, const Expr& mask) {
    require_same_shape(x, mask, "dropout-apply");
    return make(Op::kDropout, x.rows(), x.cols(), {x.ptr(), mask.ptr()});
}

Expr row_sums(const Expr& a) { return make(Op::kRowSums, a.rows(), 1, {a.ptr()}); }
Expr col_sums(const Expr& a) { return make(Op::kColSums, 1, a.cols(), {a.ptr()}); }

Expr broadcast_col(const Expr& a, Eigen::Index cols) {
    require(a.cols() == 1, "broadcast-col: input must be a column, " + shape_str(a));
    return make(Op::kBroadcastCol, a.rows(), cols, {a.ptr()});
}

Expr broadcast_row(const Expr& a, Eigen::Index rows) {
    require(a.rows() == 1, "broadcast-row: input must be a row, " + shape_str(a));
    return make(Op::kBroadcastRow, rows, a.cols(), {a.ptr()});
}

Expr broadcast_scalar(const Expr& a, Eigen::Index rows, Eigen::Index cols) {
    require(a.is_scalar(), "broadcast-scalar: input must be 1x1, " + shape_str(a));
    return make(Op::kBroadcastScalar, rows, cols, {a.ptr()});
}

Expr safe_recip(const Expr& a) { return unary(Op::kSafeRecip, a); }

Expr slice_cols(const Expr& a, Eigen::Index from, Eigen::Index to) {
    require(0 <= from && from < to && to <= a.cols(), "slice-cols: bad range");
    Expr e = make(Op::kSliceCols, a.rows(), to - from, {a.ptr()});
    Node* n = mutable_node(e);
    n->p0 = from;
    n->p1 = to;
    return e;
}

Expr pad_cols(const Expr& a, Eigen::Index offset, Eigen::Index total) {
    require(offset >= 0 && offset + a.cols() <= total, "pad-cols: bad layout");
    Expr e = make(Op::kPadCols, a.rows(), total, {a.ptr()});
    Node* n = mutable_node(e);
    n->p0 = offset;
    n->p1 = total;
    return e;
}

Expr merge_rows(const Expr& a, long k) {
    require(k >= 1 && a.rows() % k == 0, "merge-rows: rows not divisible by factor");
    if (k == 1) return a;
    Expr e = make(Op::kMergeRows, a.rows() / k, a.cols() * k, {a.ptr()});
    mutable_node(e)->p0 = k;
    return e;
}

Expr split_rows(const Expr& a, long k) {
    require(k >= 1 && a.cols() % k == 0, "split-rows: cols not divisible by factor");
    if (k == 1) return a;
    Expr e = make(Op::kSplitRows, a.rows() * k, a.cols() / k, {a.ptr()});
    mutable_node(e)->p0 = k;
    return e;
}

Expr dims_to_nodes(const Expr& a, long n, long m, long d) {
    require(a.rows() == n * d && a.cols() == m, "dims-to-nodes: layout mismatch");
    // degenerate cases are plain row-major reshapes
    if (d == 1) return split_rows(a, m);
    if (m == 1) return merge_rows(a, d);
    Expr e = make(Op::kDimsToNodes, n * m, d, {a.ptr()});
    Node* nd = mutable_node(e);
    nd->p0 = n;
    nd->p1 = m;
    nd->p2 = d;
    return e;
}

Expr nodes_to_dims(const Expr& a, long n, long m, long d) {
    require(a.rows() == n * m && a.cols() == d, "nodes-to-dims: layout mismatch");
    if (d == 1) return merge_rows(a, m);
    if (m == 1) return split_rows(a, d);
    Expr e = make(Op::kNodesToDims, n * d, m, {a.ptr()});
    Node* nd = mutable_node(e);
    nd->p0 = n;
    nd->p1 = m;
    nd->p2 = d;
    return e;
}

Expr tile_rows(const Expr& a, long times) {
    require(times >= 1, "tile-rows: bad repeat count");
    if (times == 1) return a;
    Expr e = make(Op::kTileRows, a.rows() * times, a.cols(), {a.ptr()});
    mutable_node(e)->p0 = times;
    return e;
}

Expr tile_sum(const Expr& a, long times) {
    require(times >= 1 && a.rows() % times == 0, "tile-sum: rows not divisible");
    if (times == 1) return a;
    Expr e = make(Op::kTileSum, a.rows() / times, a.cols(), {a.ptr()});
    mutable_node(e)->p0 = times;
    return e;
}

// ---- evaluation ----

void Bindings::set(const Expr& var, Tensor value) {
    if (!var.valid() || var.op() != Op::kVar)
        throw EvalError("Bindings::set: expression is not a variable");
    if (var.rows() != value.rows() || var.cols() != value.cols())
        throw EvalError("binding for variable '" + var.name() + "' has shape " +
                        std::to_string(value.rows()) + "x" + std::to_string(value.cols()) +
                        ", declared " + shape_str(var));
    by_id_[var.var_id()] = std::move(value);
}

void Bindings::set(int var_id, Tensor value) { by_id_[var_id] = std::move(value); }

const Tensor* Bindings::find(int var_id) const {
    auto it = by_id_.find(var_id);
    return it == by_id_.end() ? nullptr : &it->second;
}

namespace {

class Evaluator {
public:
    explicit Evaluator(const Bindings& b) : b_(b) {}

    const Tensor& eval(const Expr& root) {
        std::vector<const Node*> stack{root.node()};
        while (!stack.empty()) {
            const Node* n = stack.back();
            if (cache_.count(n)) {
                stack.pop_back();
                continue;
            }
            bool ready = true;
            for (const auto& in : n->inputs) {
                if (!cache_.count(in.get())) {
                    stack.push_back(in.get());
                    ready = false;
                }
            }
            if (!ready) continue;
            stack.pop_back();
            Tensor t = compute(n);
            if (!t.allFinite())
                throw EvalError(std::string("non-finite result in ") + op_name(n->op) +
                                (n->op == Op::kMatPow
                                     ? " (consider a smaller acyclicity alpha)"
                                     : ""));
            cache_.emplace(n, std::move(t));
        }
        return cache_.at(root.node());
    }

private:
    const Tensor& in(const Node* n, size_t i) { return cache_.at(n->inputs[i].get()); }

    Tensor compute(const Node* n) {
        switch (n->op) {
            case Op::kConst: return n->value;
            case Op::kVar: {
                const Tensor* t = b_.find(n->var_id);
                if (!t) throw EvalError("unbound variable '" + n->name + "'");
                if (t->rows() != n->rows || t->cols() != n->cols)
                    throw EvalError("binding for variable '" + n->name + "' has shape " +
                                    std::to_string(t->rows()) + "x" +
                                    std::to_string(t->cols()) + ", declared " +
                                    std::to_string(n->rows) + "x" + std::to_string(n->cols));
                return *t;
            }
            case Op::kAdd: return in(n, 0) + in(n, 1);
            case Op::kSub: return in(n, 0) - in(n, 1);
            case Op::kMatMul: return in(n, 0) * in(n, 1);
            case Op::kHadamard: return in(n, 0).cwiseProduct(in(n, 1));
            case Op::kScalarMul: return n->scalar * in(n, 0);
            case Op::kTranspose: return in(n, 0).transpose();
            case Op::kMatPow: {
                const Tensor& a = in(n, 0);
                Tensor acc = Tensor::Identity(a.rows(), a.cols());
                for (long i = 0; i < n->p0; ++i) acc = acc * a;
                return acc;
            }
            case Op::kSolve: {
                const Tensor& a = in(n, 0);
                const Tensor& b = in(n, 1);
                Eigen::PartialPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(a)};
                double rc = lu.rcond();
                if (!(rc > kSolveRcondFloor)) {
                    std::string what = n->name.empty() ? "linear system" : n->name;
                    throw SingularError("linear-solve: " + what +
                                        " is singular or ill-conditioned (rcond=" +
                                        std::to_string(rc) + ", condition estimate > 1e8)");
                }
                return lu.solve(Eigen::MatrixXd(b));
            }
            case Op::kTrace: {
                Tensor t(1, 1);
                t(0, 0) = in(n, 0).trace();
                return t;
            }
            case Op::kSum: {
                Tensor t(1, 1);
                t(0, 0) = in(n, 0).sum();
                return t;
            }
            case Op::kMean: {
                Tensor t(1, 1);
                t(0, 0) = in(n, 0).mean();
                return t;
            }
            case Op::kLeakyRelu: {
                double s = n->scalar;
                return in(n, 0).unaryExpr([s](double x) { return x > 0.0 ? x : s * x; });
            }
            case Op::kLeakyReluGrad: {
                double s = n->scalar;
                return in(n, 0).unaryExpr([s](double x) { return x > 0.0 ? 1.0 : s; });
            }
            case Op::kSigmoid:
                return in(n, 0).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
            case Op::kTanh: return in(n, 0).unaryExpr([](double x) { return std::tanh(x); });
            case Op::kSin: return in(n, 0).unaryExpr([](double x) { return std::sin(x); });
            case Op::kCos: return in(n, 0).unaryExpr([](double x) { return std::cos(x); });
            case Op::kLog: return in(n, 0).unaryExpr([](double x) { return std::log(x); });
            case Op::kLogClamped:
                return in(n, 0).unaryExpr(
                    [](double x) { return std::log(x > kLogClampFloor ? x : kLogClampFloor); });
            case Op::kLogClampedGrad:
                return in(n, 0).unaryExpr(
                    [](double x) { return x > kLogClampFloor ? 1.0 / x : 0.0; });
            case Op::kSafeRecip:
                return in(n, 0).unaryExpr([](double x) { return x == 0.0 ? 0.0 : 1.0 / x; });
            case Op::kSoftmaxRows: {
                Tensor out = in(n, 0);
                for (Eigen::Index i = 0; i < out.rows(); ++i) {
                    double mx = out.row(i).maxCoeff();
                    out.row(i) = (out.row(i).array() - mx).exp();
                    out.row(i) /= out.row(i).sum();
                }
                return out;
            }
            case Op::kSquare: return in(n, 0).cwiseProduct(in(n, 0));
            case Op::kL2NormRows: {
                Tensor t(n->rows, 1);
                t.col(0) = in(n, 0).rowwise().norm();
                return t;
            }
            case Op::kConcatCols: {
                Tensor t(n->rows, n->cols);
                t.leftCols(in(n, 0).cols()) = in(n, 0);
                t.rightCols(in(n, 1).cols()) = in(n, 1);
                return t;
            }
            case Op::kDropout: return in(n, 0).cwiseProduct(in(n, 1));
            case Op::kRowSums: {
                Tensor t(n->rows, 1);
                t.col(0) = in(n, 0).rowwise().sum();
                return t;
            }
            case Op::kColSums: {
                Tensor t(1, n->cols);
                t.row(0) = in(n, 0).colwise().sum();
                return t;
            }
            case Op::kBroadcastCol: return in(n, 0).col(0).replicate(1, n->cols);
            case Op::kBroadcastRow: return in(n, 0).row(0).replicate(n->rows, 1);
            case Op::kBroadcastScalar: return Tensor::Constant(n->rows, n->cols, in(n, 0)(0, 0));
            case Op::kSliceCols: return in(n, 0).middleCols(n->p0, n->p1 - n->p0);
            case Op::kPadCols: {
                Tensor t = Tensor::Zero(n->rows, n->cols);
                t.middleCols(n->p0, in(n, 0).cols()) = in(n, 0);
                return t;
            }
            case Op::kMergeRows: {
                const Tensor& a = in(n, 0);
                return Eigen::Map<const Tensor>(a.data(), n->rows, n->cols);
            }
            case Op::kSplitRows: {
                const Tensor& a = in(n, 0);
                return Eigen::Map<const Tensor>(a.data(), n->rows, n->cols);
            }
            case Op::kDimsToNodes: {
                const Tensor& a = in(n, 0); // (n*d) x m
                long N = n->p0, M = n->p1, D = n->p2;
                Tensor t(N * M, D);
                for (long i = 0; i < N; ++i)
                    for (long b = 0; b < D; ++b)
                        for (long a2 = 0; a2 < M; ++a2)
                            t(i * M + a2, b) = a(i * D + b, a2);
                return t;
            }
            case Op::kNodesToDims: {
                const Tensor& a = in(n, 0); // (n*m) x d
                long N = n->p0, M = n->p1, D = n->p2;
                Tensor t(N * D, M);
                for (long i = 0; i < N; ++i)
                    for (long a2 = 0; a2 < M; ++a2)
                        for (long b = 0; b < D; ++b)
                            t(i * D + b, a2) = a(i * M + a2, b);
                return t;
            }
            case Op::kTileRows: {
                const Tensor& a = in(n, 0);
                return a.replicate(n->p0, 1);
            }
            case Op::kTileSum: {
                const Tensor& a = in(n, 0);
                Tensor t = Tensor::Zero(n->rows, n->cols);
                for (long r = 0; r < n->p0; ++r) t += a.middleRows(r * n->rows, n->rows);
                return t;
            }
        }
        throw EvalError("unknown operation");
    }

    const Bindings& b_;
    std::unordered_map<const Node*, Tensor> cache_;
};

std::vector<const Node*> topo_order(const Node* root) {
    std::vector<const Node*> order;
    std::unordered_set<const Node*> done;
    std::vector<std::pair<const Node*, size_t>> stack{{root, 0}};
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (done.count(n)) {
            stack.pop_back();
            continue;
        }
        if (next < n->inputs.size()) {
            const Node* child = n->inputs[next++].get();
            if (!done.count(child)) stack.push_back({child, 0});
        } else {
            done.insert(n);
            order.push_back(n);
            stack.pop_back();
        }
    }
    return order;
}

} // namespace

Tensor evaluate(const Expr& root, const Bindings& bindings) {
    if (!root.valid()) throw EvalError("evaluate: null expression");
    Evaluator ev(bindings);
    return ev.eval(root);
}

std::vector<Tensor> evaluate_many(std::span<const Expr> roots, const Bindings& bindings) {
    Evaluator ev(bindings);
    std::vector<Tensor> out;
    out.reserve(roots.size());
    for (const Expr& r : roots) out.push_back(ev.eval(r));
    return out;
}

// ---- differentiation ----

namespace {

class BackwardPass {
public:
    BackwardPass(const Expr& root, std::span<const Expr> wrt) : root_(root) {
        for (const Expr& v : wrt) {
            if (!v.valid() || v.op() != Op::kVar)
                throw EvalError("gradient: wrt entries must be variables");
            wrt_ids_.insert(v.var_id());
        }
        order_ = topo_order(root.node());
        build_handles();
        mark_active();
    }

    // adjoint of every node that can reach a wrt variable
    std::unordered_map<const Node*, Expr> run() {
        std::unordered_map<const Node*, Expr> adj;
        if (!active_.count(root_.node())) return adj;
        adj[root_.node()] = constant_scalar(1.0);
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            const Node* n = *it;
            auto a_it = adj.find(n);
            if (a_it == adj.end()) continue;
            const Expr& a = a_it->second;
            for (size_t i = 0; i < n->inputs.size(); ++i) {
                const Node* child = n->inputs[i].get();
                if (!active_.count(child)) continue;
                Expr contrib = vjp(n, i, a);
                if (!contrib.valid()) continue;
                auto c_it = adj.find(child);
                if (c_it == adj.end())
                    adj.emplace(child, contrib);
                else
                    c_it->second = add(c_it->second, contrib);
            }
        }
        return adj;
    }

    const std::vector<const Node*>& order() const { return order_; }
    bool is_wrt_id(int id) const { return wrt_ids_.count(id) > 0; }

private:
    void build_handles() {
        // Map each node to an owning Expr. Children are owned by their
        // parents' input edges; the root is owned by root_.
        handles_.reserve(order_.size());
        handles_[root_.node()] = root_;
        for (const Node* n : order_)
            for (const auto& in : n->inputs) handles_.emplace(in.get(), Expr(in));
    }

    void mark_active() {
        for (const Node* n : order_) {
            bool act = n->op == Op::kVar && wrt_ids_.count(n->var_id);
            if (!act)
                for (const auto& in : n->inputs)
                    if (active_.count(in.get())) {
                        act = true;
                        break;
                    }
            if (act) active_.insert(n);
        }
    }

    Expr handle(const Node* n) const { return handles_.at(n); }

    Expr vjp(const Node* n, size_t i, const Expr& adj) {
        Expr self = handle(n);
        switch (n->op) {
            case Op::kConst:
            case Op::kVar: return {};
            case Op::kAdd: return adj;
            case Op::kSub: return i == 0 ? adj : scalar_mul(adj, -1.0);
            case Op::kMatMul: {
                Expr A = handle(n->inputs[0].get());
                Expr B = handle(n->inputs[1].get());
                return i == 0 ? matmul(adj, transpose(B)) : matmul(transpose(A), adj);
            }
            case Op::kHadamard: {
                Expr other = handle(n->inputs[i == 0 ? 1 : 0].get());
                return hadamard(adj, other);
            }
            case Op::kScalarMul: return scalar_mul(adj, n->scalar);
            case Op::kTranspose: return transpose(adj);
            case Op::kMatPow: {
                long k = n->p0;
                if (k == 0) return {};
                Expr X = handle(n->inputs[0].get());
                if (k == 1) return adj;
                // dX = sum_{i+j=k-1} (X^i)^T adj (X^j)^T, with the power chain
                // shared so evaluation costs O(k) products, not O(k^2)
                std::vector<Expr> pow(k); // pow[j] = X^j for j >= 1
                pow[1] = X;
                for (long j = 2; j < k; ++j) pow[j] = matmul(pow[j - 1], X);
                std::vector<Expr> pow_t(k);
                for (long j = 1; j < k; ++j) pow_t[j] = transpose(pow[j]);
                Expr acc;
                for (long a = 0; a < k; ++a) {
                    long b = k - 1 - a;
                    Expr term = a == 0 ? adj : matmul(pow_t[a], adj);
                    if (b > 0) term = matmul(term, pow_t[b]);
                    acc = acc.valid() ? add(acc, term) : term;
                }
                return acc;
            }
            case Op::kSolve: {
                Expr A = handle(n->inputs[0].get());
                Expr S = linear_solve(transpose(A), adj,
                                      n->name.empty() ? std::string() : n->name + " (adjoint)");
                if (i == 1) return S;
                return scalar_mul(matmul(S, transpose(self)), -1.0);
            }
            case Op::kTrace: {
                Eigen::Index m = n->inputs[0]->rows;
                return hadamard(broadcast_scalar(adj, m, m), identity_const(m));
            }
            case Op::kSum:
                return broadcast_scalar(adj, n->inputs[0]->rows, n->inputs[0]->cols);
            case Op::kMean: {
                Eigen::Index r = n->inputs[0]->rows, c = n->inputs[0]->cols;
                return scalar_mul(broadcast_scalar(adj, r, c),
                                  1.0 / static_cast<double>(r * c));
            }
            case Op::kLeakyRelu:
                return hadamard(adj, leaky_relu_grad(handle(n->inputs[0].get()), n->scalar));
            case Op::kLeakyReluGrad: return {}; // piecewise constant: derivative is zero
            case Op::kSigmoid: return hadamard(adj, sub(self, square(self)));
            case Op::kTanh:
                return hadamard(adj, sub(ones_const(n->rows, n->cols), square(self)));
            case Op::kSin: return hadamard(adj, cos_op(handle(n->inputs[0].get())));
            case Op::kCos:
                return scalar_mul(hadamard(adj, sin_op(handle(n->inputs[0].get()))), -1.0);
            case Op::kLog: return hadamard(adj, safe_recip(handle(n->inputs[0].get())));
            case Op::kLogClamped:
                return hadamard(adj, log_clamped_grad(handle(n->inputs[0].get())));
            case Op::kLogClampedGrad:
                return scalar_mul(hadamard(adj, square(self)), -1.0);
            case Op::kSafeRecip: return scalar_mul(hadamard(adj, square(self)), -1.0);
            case Op::kSoftmaxRows: {
                Expr prod = hadamard(adj, self);
                Expr corr = broadcast_col(row_sums(prod), n->cols);
                return hadamard(self, sub(adj, corr));
            }
            case Op::kSquare:
                return scalar_mul(hadamard(adj, handle(n->inputs[0].get())), 2.0);
            case Op::kL2NormRows: {
                Expr X = handle(n->inputs[0].get());
                Expr scale = hadamard(adj, safe_recip(self));
                return hadamard(broadcast_col(scale, n->inputs[0]->cols), X);
            }
            case Op::kConcatCols: {
                Eigen::Index ca = n->inputs[0]->cols;
                return i == 0 ? slice_cols(adj, 0, ca) : slice_cols(adj, ca, n->cols);
            }
            case Op::kDropout:
                return i == 0 ? hadamard(adj, handle(n->inputs[1].get())) : Expr{};
            case Op::kRowSums: return broadcast_col(adj, n->inputs[0]->cols);
            case Op::kColSums: return broadcast_row(adj, n->inputs[0]->rows);
            case Op::kBroadcastCol: return row_sums(adj);
            case Op::kBroadcastRow: return col_sums(adj);
            case Op::kBroadcastScalar: return sum(adj);
            case Op::kSliceCols: return pad_cols(adj, n->p0, n->inputs[0]->cols);
            case Op::kPadCols: return slice_cols(adj, n->p0, n->p0 + n->inputs[0]->cols);
            case Op::kMergeRows: return split_rows(adj, n->p0);
            case Op::kSplitRows: return merge_rows(adj, n->p0);
            case Op::kDimsToNodes: return nodes_to_dims(adj, n->p0, n->p1, n->p2);
            case Op::kNodesToDims: return dims_to_nodes(adj, n->p0, n->p1, n->p2);
            case Op::kTileRows: return tile_sum(adj, n->p0);
            case Op::kTileSum: return tile_rows(adj, n->p0);
        }
        throw EvalError("unknown operation in backward pass");
    }

    Expr root_;
    std::unordered_set<int> wrt_ids_;
    std::vector<const Node*> order_;
    std::unordered_map<const Node*, Expr> handles_;
    std::unordered_set<const Node*> active_;
};

} // namespace

std::vector<Expr> gradient_exprs(const Expr& scalar_root, std::span<const Expr> wrt) {
    if (!scalar_root.valid()) throw EvalError("gradient: null expression");
    if (!scalar_root.is_scalar())
        throw EvalError("gradient requires a scalar (1x1) expression, got " +
                        std::to_string(scalar_root.rows()) + "x" +
                        std::to_string(scalar_root.cols()));
    BackwardPass pass(scalar_root, wrt);
    auto adjoints = pass.run();

    // Sum adjoints per variable id (a variable may appear as several nodes).
    std::unordered_map<int, Expr> by_id;
    for (const Node* n : pass.order()) {
        if (n->op != Op::kVar || !pass.is_wrt_id(n->var_id)) continue;
        auto it = adjoints.find(n);
        if (it == adjoints.end()) continue;
        auto slot = by_id.find(n->var_id);
        if (slot == by_id.end())
            by_id.emplace(n->var_id, it->second);
        else
            slot->second = add(slot->second, it->second);
    }

    std::vector<Expr> out;
    out.reserve(wrt.size());
    for (const Expr& v : wrt) {
        auto it = by_id.find(v.var_id());
        if (it != by_id.end())
            out.push_back(it->second);
        else
            out.push_back(zeros_const(v.rows(), v.cols())); // exact zero
    }
    return out;
}

std::vector<Tensor> gradient(const Expr& scalar_root, std::span<const Expr> wrt,
                             const Bindings& bindings) {
    std::vector<Expr> g = gradient_exprs(scalar_root, wrt);
    return evaluate_many(g, bindings);
}

Expr gradient_norm_penalty_expr(const Expr& row_scores, const Expr& input_var) {
    if (row_scores.cols() != 1)
        throw EvalError("gradient penalty: scores must be one per packed row (n x 1)");
    Expr total = sum(row_scores);
    std::vector<Expr> wrt{input_var};
    Expr input_grad = gradient_exprs(total, wrt)[0];
    Expr norms = l2_norm_rows(input_grad);
    Expr centered = sub(norms, ones_const(norms.rows(), 1));
    return mean(square(centered));
}

PenaltyGrads gradient_norm_penalty_grad(const Expr& row_scores, const Expr& input_var,
                                        std::span<const Expr> weights,
                                        const Bindings& bindings) {
    Expr penalty = gradient_norm_penalty_expr(row_scores, input_var);
    std::vector<Expr> roots{penalty};
    std::vector<Expr> grads = gradient_exprs(penalty, weights);
    roots.insert(roots.end(), grads.begin(), grads.end());
    std::vector<Tensor> vals = evaluate_many(roots, bindings);
    PenaltyGrads out;
    out.value = vals[0](0, 0);
    out.grads.assign(vals.begin() + 1, vals.end());
    return out;
}

} // namespace dagwgan::ad
