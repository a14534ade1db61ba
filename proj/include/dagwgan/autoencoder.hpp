// SPDX-License-Identifier: Apache-2.0
//
// Structural-causal-model autoencoder. Encoder Z = (I - A^T) f1(X), decoder
// M_X = f2((I - A^T)^{-1} Z), reconstruction and latent-regularizer losses,
// and the discrete-mode cross-entropy.
//
// Batch convention: data matrices are n x (num_nodes * node_dim) with columns
// grouped node-major (all dims of node 0, then node 1, ...). Internally the
// graph switches between that layout and a (n*node_dim) x num_nodes layout in
// which the adjacency acts by plain matrix multiplication.

#pragma once

#include "dagwgan/mlp.hpp"

#include <optional>

namespace dagwgan {

enum class DataMode { kContinuous, kDiscrete };

struct AeConfig {
    int num_nodes = 2; // m: adjacency side
    int node_dim = 1;  // d: per-variable width (1 continuous, category count one-hot)
    std::vector<int> hidden_dims; // empty => identity f1/f2
    DataMode data_mode = DataMode::kContinuous;
    /// Per-node additive bias on the decoder output. Off by default; useful in
    /// discrete mode where f2 is shared across nodes.
    bool node_bias = false;
    /// Per-node category counts when they differ; empty means node_dim each.
    /// One-hot blocks are zero-padded up to node_dim and masked out of the
    /// softmax and the loss.
    std::vector<int> cardinalities;
    /// A starts at zero (feasible: h(0) = 0); alternatively small symmetric
    /// uniform noise.
    bool a_random_init = false;

    int width() const { return num_nodes * node_dim; }
    void validate() const;
};

struct AeParams {
    Tensor A;         // num_nodes x num_nodes
    MlpParams f1, f2; // act on the node_dim axis, weights shared across nodes
    Tensor node_bias; // num_nodes x node_dim (zero when disabled)
};

AeParams init_ae(const AeConfig& cfg, Rng& rng);

struct AeVars {
    ad::Expr A;
    MlpVars f1, f2;
    ad::Expr node_bias; // only valid when cfg.node_bias

    /// All trainable variables (A first).
    std::vector<ad::Expr> all() const;
};

AeVars make_ae_vars(const AeConfig& cfg, const AeParams& p);
void bind_ae(ad::Bindings& b, const AeVars& vars, const AeParams& p);

// ---- graph builders ----

/// X: n x (m*d) -> Z in dim-rows layout (n*d) x m.
ad::Expr encode_expr(const AeConfig& cfg, const AeVars& vars, const ad::Expr& X, int batch);

/// Z in dim-rows layout -> M_X (continuous) / P_X (discrete, row-stochastic
/// per node block), n x (m*d).
ad::Expr decode_expr(const AeConfig& cfg, const AeVars& vars, const ad::Expr& Z, int batch);

/// 0.5 * sum of squared residuals per sample, batch mean.
ad::Expr reconstruction_loss_expr(const ad::Expr& X, const ad::Expr& M_X, int batch);

/// 0.5 * sum of squared latents per sample, batch mean.
ad::Expr latent_regularizer_expr(const ad::Expr& Z, int batch);

/// -sum X log P per sample, batch mean; log arguments clamped at 1e-12.
ad::Expr cross_entropy_expr(const ad::Expr& X_onehot, const ad::Expr& P_X, int batch);

// ---- value-level convenience (n x (m*d) in and out) ----

Tensor encode(const AeConfig& cfg, const AeParams& p, const Tensor& X);
Tensor decode(const AeConfig& cfg, const AeParams& p, const Tensor& Z);
double reconstruction_loss(const Tensor& X, const Tensor& M_X);
double latent_regularizer(const Tensor& M_Z);
double cross_entropy_loss(const Tensor& X_onehot, const Tensor& P_X);

} // namespace dagwgan
