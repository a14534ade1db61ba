// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dagwgan/critic.hpp"
#include "dagwgan/trainer.hpp"

namespace dagwgan::testing {

/// Trains a fresh critic (generator frozen) to separate 1-D samples of
/// Normal(0,1) from Normal(mu,1) and returns the estimated distance
/// mean D(real) - mean D(fake) on held-out data.
inline double trained_critic_distance(double mu, std::uint64_t seed, int steps = 300,
                                      int batch = 200) {
    using namespace ad;
    CriticConfig ccfg;
    ccfg.pac = 10;
    ccfg.hidden_dims = {64, 64};
    Rng rng(seed);
    Rng init_rng = rng.split(1);
    CriticParams critic = init_critic(ccfg, 1, init_rng);
    CriticVars vars = make_critic_vars(critic);

    const int packs = batch / ccfg.pac;
    const int pw = ccfg.pac;
    Expr xr = variable("xr", packs, pw);
    Expr xf = variable("xf", packs, pw);
    Expr xh = variable("xh", packs, pw);
    std::vector<Expr> mr, mf;
    for (size_t l = 0; l < ccfg.hidden_dims.size(); ++l) {
        mr.push_back(variable("mr" + std::to_string(l), packs, ccfg.hidden_dims[l]));
        mf.push_back(variable("mf" + std::to_string(l), packs, ccfg.hidden_dims[l]));
    }
    Expr s_real = critic_score_expr(ccfg, vars, xr, mr);
    Expr s_fake = critic_score_expr(ccfg, vars, xf, mf);
    Expr s_hat = critic_score_expr(ccfg, vars, xh);
    Expr l_d = add(sub(mean(s_fake), mean(s_real)),
                   scalar_mul(gradient_norm_penalty_expr(s_hat, xh), ccfg.gp_lambda));
    std::vector<Expr> var_list = vars.all();
    std::vector<Expr> grads = gradient_exprs(l_d, var_list);
    std::vector<Expr> roots{l_d};
    roots.insert(roots.end(), grads.begin(), grads.end());

    std::vector<Tensor*> ptrs;
    for (auto& w : critic.mlp.weights) ptrs.push_back(&w);
    for (auto& b : critic.mlp.biases) ptrs.push_back(&b);
    std::vector<const Tensor*> cptrs(ptrs.begin(), ptrs.end());
    AdamState adam = make_adam_state(cptrs, 1e-3);

    auto draw = [&](Rng& r, double mean, int n) {
        Tensor t(n, 1);
        for (int i = 0; i < n; ++i) t(i, 0) = r.normal(mean, 1.0);
        return t;
    };

    Rng data_rng = rng.split(2);
    for (int s = 0; s < steps; ++s) {
        Tensor real = pack(draw(data_rng, 0.0, batch), ccfg.pac);
        Tensor fake = pack(draw(data_rng, mu, batch), ccfg.pac);
        Tensor x_hat(packs, pw);
        for (int i = 0; i < packs; ++i) {
            double e = data_rng.uniform();
            x_hat.row(i) = e * real.row(i) + (1.0 - e) * fake.row(i);
        }
        Bindings b;
        bind_critic(b, vars, critic);
        b.set(xr, real);
        b.set(xf, fake);
        b.set(xh, x_hat);
        for (size_t l = 0; l < mr.size(); ++l) {
            b.set(mr[l], sample_dropout_mask(packs, ccfg.hidden_dims[l], ccfg.dropout_p,
                                             data_rng));
            b.set(mf[l], sample_dropout_mask(packs, ccfg.hidden_dims[l], ccfg.dropout_p,
                                             data_rng));
        }
        std::vector<Tensor> vals = evaluate_many(roots, b);
        std::vector<Tensor> g(vals.begin() + 1, vals.end());
        adam_step(ptrs, g, adam);
    }

    Rng eval_rng = rng.split(3);
    Tensor real_eval = pack(draw(eval_rng, 0.0, 4000), ccfg.pac);
    Tensor fake_eval = pack(draw(eval_rng, mu, 4000), ccfg.pac);
    double dr = critic_score(ccfg, critic, real_eval).mean();
    double df = critic_score(ccfg, critic, fake_eval).mean();
    return dr - df;
}

} // namespace dagwgan::testing
