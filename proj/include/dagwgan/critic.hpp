// SPDX-License-Identifier: Apache-2.0
//
// Wasserstein critic with packing, leaky-ReLU, dropout and gradient penalty.

#pragma once

#include "dagwgan/mlp.hpp"

namespace dagwgan {

struct CriticConfig {
    int pac = 10;
    std::vector<int> hidden_dims{256, 256};
    double leaky_slope = 0.2;
    double dropout_p = 0.5;
    double gp_lambda = 10.0;
    /// Dropout inside the penalty pass makes the Lipschitz target stochastic;
    /// off by default.
    bool dropout_in_penalty = false;

    void validate() const;
};

struct CriticParams {
    MlpParams mlp; // input width pac * num_nodes * node_dim, scalar output, no final activation
};

CriticParams init_critic(const CriticConfig& cfg, int sample_width, Rng& rng);

struct CriticVars {
    MlpVars mlp;
    std::vector<ad::Expr> all() const { return mlp.all(); }
};

CriticVars make_critic_vars(const CriticParams& p);
void bind_critic(ad::Bindings& b, const CriticVars& vars, const CriticParams& p);

/// Consecutive groups of pac samples flattened into single critic inputs.
/// Rows beyond the largest multiple of pac are dropped with a warning on
/// stderr. Throws DataError on an empty batch.
Tensor pack(const Tensor& batch, int pac);

/// One score per packed row. `masks` (one per hidden layer) applies dropout;
/// pass empty for a deterministic pass.
ad::Expr critic_score_expr(const CriticConfig& cfg, const CriticVars& vars,
                           const ad::Expr& packed, std::span<const ad::Expr> masks = {});

/// Dropout mask tensor for one hidden layer: Bernoulli(1 - p) / (1 - p).
Tensor sample_dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng);

// ---- value-level operations ----

/// Scores for a packed batch under explicit dropout masks (empty = none).
Tensor critic_score(const CriticConfig& cfg, const CriticParams& p, const Tensor& packed,
                    const std::vector<Tensor>& dropout_masks = {});

/// L_D = mean D(fake) - mean D(real) + lambda * mean[(||grad_xhat D(xhat)|| - 1)^2]
/// with xhat = eps*real + (1-eps)*fake, eps ~ U[0,1] per packed row. Dropout
/// masks are drawn from rng for the real/fake passes (penalty pass excluded
/// by default).
double critic_loss(const Tensor& x_real, const Tensor& x_fake, const CriticParams& p,
                   const CriticConfig& cfg, Rng& rng);

/// L_G = -mean D(fake). Deterministic (no dropout).
double generator_loss(const Tensor& x_fake, const CriticParams& p, const CriticConfig& cfg);

} // namespace dagwgan
