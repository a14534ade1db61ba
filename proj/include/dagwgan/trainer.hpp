// SPDX-License-Identifier: Apache-2.0
//
// End-to-end constrained training: alternating critic / autoencoder updates
// with Adam and a learning-rate schedule, wrapped in an augmented-Lagrangian
// outer loop that enforces acyclicity_h(A) = 0.

#pragma once

#include "dagwgan/autoencoder.hpp"
#include "dagwgan/critic.hpp"
#include "dagwgan/graph_tools.hpp"

#include <functional>
#include <limits>
#include <memory>

namespace dagwgan {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m, v;
    long step = 0;
    double lr = 3e-3;
    AdamConfig cfg;
};

AdamState make_adam_state(const std::vector<const Tensor*>& params, double lr,
                          AdamConfig cfg = {});

/// Standard bias-corrected update in place. Throws EvalError on non-finite
/// gradients.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& st);

struct TrainConfig {
    int epochs_per_outer = 300;
    int max_outer_iters = 20;
    int n_critic = 5;
    int batch_size = 256;
    double lr = 3e-3;
    double lr_decay = 0.75;
    double h_tolerance = 1e-8;
    double rho_max = 1e16;
    std::uint64_t seed = 0;
    bool standardize = false;
    double gen_loss_weight = 1.0;

    void validate() const;
};

/// lr = cfg.lr * cfg.lr_decay^outer_iter, applied to both optimizers.
double lr_schedule(int outer_iter, const TrainConfig& cfg);

struct AugLagState {
    double multiplier = 0.0;
    double rho = 1.0;
    double h_prev = std::numeric_limits<double>::infinity();
    int outer_iter = 0;
};

/// multiplier += rho * h; then rho *= 10 (capped at rho_max) unless h made
/// sufficient progress (h <= 0.25 * h_prev); finally h_prev = h.
void auglag_update(AugLagState& st, double h, double rho_max);

struct ExperimentConfig {
    TrainConfig train;
    AeConfig ae;
    CriticConfig critic;
    double acyclicity_alpha = 0.0; // 0 selects the default 1/num_nodes
    double edge_tau = 0.3;
    /// Train the autoencoder alone (no critic, no adversarial term).
    bool ae_only = false;
    /// Feed reconstructions to the critic instead of prior-sampled decodes.
    bool fake_from_reconstruction = false;

    double alpha() const {
        return acyclicity_alpha > 0.0 ? acyclicity_alpha : 1.0 / ae.num_nodes;
    }
    void validate() const;
};

struct EpochRecord {
    int outer = 0;
    int epoch = 0;
    double loss_d = 0.0;
    double loss_g = 0.0;
    double loss_r = 0.0;
    double h = 0.0;
    double lr = 0.0;
    double multiplier = 0.0;
    double rho = 0.0;
};

struct TrainResult {
    AeParams ae;
    CriticParams critic;
    Tensor A;              // diagonal hard-zeroed
    EdgeSet learned_edges; // |A[i][j]| > edge_tau
    AugLagState auglag;
    bool converged = false;
    bool aborted = false; // non-finite loss; params are the last good snapshot
    std::string abort_reason;
    double final_h = 0.0;
    std::vector<EpochRecord> history;
};

class Trainer {
public:
    Trainer(Tensor data, ExperimentConfig cfg);
    ~Trainer();
    Trainer(const Trainer&) = delete;
    Trainer& operator=(const Trainer&) = delete;

    /// One pass over the data: per minibatch, n_critic critic updates
    /// minimizing L_D, then one joint encoder/decoder update minimizing
    /// L_R + gen_loss_weight*L_G + multiplier*h + (rho/2)*h^2.
    EpochRecord inner_epoch();

    double current_h() const;
    void set_outer(int outer_iter); // updates learning rates per schedule
    void set_auglag(const AugLagState& st);

    /// Full augmented-Lagrangian loop.
    TrainResult run(const std::function<void(int, const Trainer&)>& on_outer = {});

    const AeParams& ae_params() const;
    const CriticParams& critic_params() const;
    const AugLagState& auglag() const;
    const AdamState& ae_adam() const;
    const AdamState& critic_adam() const;
    const ExperimentConfig& config() const;
    Tensor final_adjacency() const; // current A, diagonal zeroed

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

TrainResult augmented_lagrangian_loop(Tensor data, const ExperimentConfig& cfg,
                                      const std::function<void(int, const Trainer&)>& on_outer = {});

/// Per-column (x - mean) / std; zero-variance columns are only centered.
Tensor standardize_columns(const Tensor& data);

} // namespace dagwgan
