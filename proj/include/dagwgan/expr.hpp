// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense matrices.
//
// Expressions form an immutable DAG. gradient_exprs() performs the backward
// pass *symbolically*: the returned gradients are expressions built from the
// same operation set, so they can be differentiated again. That is what makes
// the gradient-of-gradient needed by the critic's gradient penalty work: every
// operation's backward rule is expressed in terms of operations that
// themselves have backward rules.

#pragma once

#include "dagwgan/tensor.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dagwgan::ad {

enum class Op {
    // leaves
    kConst,
    kVar,
    // core operation set
    kAdd,
    kSub,
    kMatMul,
    kHadamard,
    kScalarMul,
    kTranspose,
    kMatPow,
    kSolve,
    kTrace,
    kSum,
    kMean,
    kLeakyRelu,
    kSigmoid,
    kTanh,
    kSin,
    kCos,
    kLog,
    kSoftmaxRows,
    kSquare,
    kL2NormRows,
    kConcatCols,
    kDropout,
    // helpers that keep every backward pass expressible in-graph
    kLeakyReluGrad,
    kLogClamped,
    kLogClampedGrad,
    kSafeRecip,
    kRowSums,
    kColSums,
    kBroadcastCol,
    kBroadcastRow,
    kBroadcastScalar,
    kSliceCols,
    kPadCols,
    kMergeRows,
    kSplitRows,
    kDimsToNodes,
    kNodesToDims,
    kTileRows,
    kTileSum,
};

const char* op_name(Op op);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<NodePtr> inputs;

    Tensor value;            // kConst
    int var_id = -1;         // kVar
    std::string name;        // kVar name; kSolve diagnostic context
    double scalar = 0.0;     // kScalarMul factor; kLeakyRelu[Grad] slope
    long p0 = 0, p1 = 0, p2 = 0; // integer payloads (exponent, slice range, layout dims, ...)
    std::uint64_t uid = 0;
};

/// Value-semantic handle to an immutable expression node.
class Expr {
public:
    Expr() = default;
    explicit Expr(NodePtr n) : n_(std::move(n)) {}

    bool valid() const { return n_ != nullptr; }
    const Node* node() const { return n_.get(); }
    const NodePtr& ptr() const { return n_; }

    Op op() const { return n_->op; }
    Eigen::Index rows() const { return n_->rows; }
    Eigen::Index cols() const { return n_->cols; }
    bool is_scalar() const { return n_->rows == 1 && n_->cols == 1; }
    int var_id() const { return n_->var_id; }
    const std::string& name() const { return n_->name; }

private:
    NodePtr n_;
};

// ---- leaf constructors ----

Expr constant(Tensor value);
Expr constant_scalar(double value);
Expr zeros_const(Eigen::Index rows, Eigen::Index cols);
Expr ones_const(Eigen::Index rows, Eigen::Index cols);
Expr identity_const(Eigen::Index n);

/// Fresh variable; ids are unique per process.
Expr variable(std::string name, Eigen::Index rows, Eigen::Index cols);

// ---- operations ----

Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr matmul(const Expr& a, const Expr& b);
Expr hadamard(const Expr& a, const Expr& b);
Expr scalar_mul(const Expr& a, double c);
Expr transpose(const Expr& a);
Expr matpow(const Expr& a, long exponent);
/// X = A^{-1} B via LU with partial pivoting; `context` names the system in
/// diagnostics when it is ill-conditioned.
Expr linear_solve(const Expr& a, const Expr& b, std::string context = {});
Expr trace(const Expr& a);
Expr sum(const Expr& a);
Expr mean(const Expr& a);
Expr leaky_relu(const Expr& a, double slope);
Expr sigmoid(const Expr& a);
Expr tanh_op(const Expr& a);
Expr sin_op(const Expr& a);
Expr cos_op(const Expr& a);
Expr log_op(const Expr& a);
/// ln(max(x, 1e-12)); the clamp keeps cross-entropy finite on hard zeros.
Expr log_clamped(const Expr& a);
Expr softmax_rows(const Expr& a);
Expr square(const Expr& a);
/// Euclidean norm of each row: n x k -> n x 1.
Expr l2_norm_rows(const Expr& a);
Expr concat_cols(const Expr& a, const Expr& b);
/// x multiplied by a pre-sampled mask; the mask is a constant for
/// differentiation purposes.
Expr dropout_apply(const Expr& x, const Expr& mask);

// layout and reduction helpers (all differentiable)
Expr row_sums(const Expr& a);                            // n x k -> n x 1
Expr col_sums(const Expr& a);                            // n x k -> 1 x k
Expr broadcast_col(const Expr& a, Eigen::Index cols);    // n x 1 -> n x cols
Expr broadcast_row(const Expr& a, Eigen::Index rows);    // 1 x k -> rows x k
Expr broadcast_scalar(const Expr& a, Eigen::Index rows, Eigen::Index cols);
/// 1/x with 0 mapped to 0 (the subgradient convention at a zero-norm row).
Expr safe_recip(const Expr& a);
Expr slice_cols(const Expr& a, Eigen::Index from, Eigen::Index to);
Expr pad_cols(const Expr& a, Eigen::Index offset, Eigen::Index total);
Expr merge_rows(const Expr& a, long k);                  // (p*k) x q -> p x (k*q)
Expr split_rows(const Expr& a, long k);                  // p x (k*q) -> (p*k) x q
/// Batch layout change: (n*d) x m, sample-major dim rows -> (n*m) x d,
/// sample-major node rows. Inverse of nodes_to_dims.
Expr dims_to_nodes(const Expr& a, long n, long m, long d);
Expr nodes_to_dims(const Expr& a, long n, long m, long d);
Expr tile_rows(const Expr& a, long times);               // m x d -> (times*m) x d
Expr tile_sum(const Expr& a, long times);                // (times*m) x d -> m x d
Expr leaky_relu_grad(const Expr& a, double slope);

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }

// ---- evaluation ----

class Bindings {
public:
    void set(const Expr& var, Tensor value);
    void set(int var_id, Tensor value);
    const Tensor* find(int var_id) const;

private:
    std::unordered_map<int, Tensor> by_id_;
};

/// Deterministic value of the expression; identical bindings give
/// bit-identical outputs. Throws EvalError on unbound variables or
/// non-finite intermediate results.
Tensor evaluate(const Expr& root, const Bindings& bindings);

/// Evaluates several roots sharing one memoization cache, so common
/// subgraphs are computed once.
std::vector<Tensor> evaluate_many(std::span<const Expr> roots, const Bindings& bindings);

// ---- differentiation ----

/// Symbolic backward pass of a scalar expression. Returns one expression per
/// requested variable; a variable the root does not depend on yields an
/// exactly-zero constant. The results may be differentiated again.
std::vector<Expr> gradient_exprs(const Expr& scalar_root, std::span<const Expr> wrt);

/// Convenience: evaluates gradient_exprs under the given bindings.
std::vector<Tensor> gradient(const Expr& scalar_root, std::span<const Expr> wrt,
                             const Bindings& bindings);

/// mean over rows of (||grad of score w.r.t. the input row|| - 1)^2, as an
/// expression. `row_scores` must be one critic score per packed row (n x 1)
/// and `input_var` the variable holding the packed interpolates.
Expr gradient_norm_penalty_expr(const Expr& row_scores, const Expr& input_var);

struct PenaltyGrads {
    double value = 0.0;
    std::vector<Tensor> grads;
};

/// Value of the gradient penalty plus its gradient w.r.t. the given weight
/// variables, computed by double backward.
PenaltyGrads gradient_norm_penalty_grad(const Expr& row_scores, const Expr& input_var,
                                        std::span<const Expr> weights,
                                        const Bindings& bindings);

} // namespace dagwgan::ad
