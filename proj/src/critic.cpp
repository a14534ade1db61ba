// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/critic.hpp"

#include <iostream>

namespace dagwgan {

using namespace ad;

void CriticConfig::validate() const {
    if (pac < 1) throw DataError("CriticConfig: pac must be >= 1");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
        throw DataError("CriticConfig: leaky_slope must be in (0,1)");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw DataError("CriticConfig: dropout_p must be in [0,1)");
    if (!(gp_lambda >= 0.0)) throw DataError("CriticConfig: gp_lambda must be nonnegative");
}

CriticParams init_critic(const CriticConfig& cfg, int sample_width, Rng& rng) {
    cfg.validate();
    std::vector<int> dims;
    dims.push_back(cfg.pac * sample_width);
    for (int hdim : cfg.hidden_dims) dims.push_back(hdim);
    dims.push_back(1);
    CriticParams p;
    p.mlp = init_mlp(dims, Activation::kLeakyRelu, rng);
    p.mlp.leaky_slope = cfg.leaky_slope;
    return p;
}

CriticVars make_critic_vars(const CriticParams& p) {
    return CriticVars{make_mlp_vars("critic", p.mlp)};
}

void bind_critic(ad::Bindings& b, const CriticVars& vars, const CriticParams& p) {
    bind_mlp(b, vars.mlp, p.mlp);
}

Tensor pack(const Tensor& batch, int pac) {
    if (batch.rows() == 0) throw DataError("pack: empty batch");
    if (pac < 1) throw DataError("pack: pac must be >= 1");
    Eigen::Index packs = batch.rows() / pac;
    if (packs == 0)
        throw DataError("pack: batch of " + std::to_string(batch.rows()) +
                        " rows is smaller than pac=" + std::to_string(pac));
    Eigen::Index kept = packs * pac;
    if (kept != batch.rows())
        std::cerr << "warning: pack dropped " << (batch.rows() - kept)
                  << " of " << batch.rows() << " rows (pac=" << pac << ")\n";
    // row-major reshape: pac consecutive rows become one packed row
    return Eigen::Map<const Tensor>(batch.data(), packs, pac * batch.cols());
}

Expr critic_score_expr(const CriticConfig& cfg, const CriticVars& vars, const Expr& packed,
                       std::span<const Expr> masks) {
    MlpParams meta;
    meta.hidden_act = Activation::kLeakyRelu;
    meta.leaky_slope = cfg.leaky_slope;
    return mlp_forward(packed, vars.mlp, meta, masks);
}

Tensor sample_dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
    Tensor mask(rows, cols);
    if (p <= 0.0) {
        mask.setOnes();
        return mask;
    }
    const double keep_scale = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i)
        mask.data()[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
    return mask;
}

Tensor critic_score(const CriticConfig& cfg, const CriticParams& p, const Tensor& packed,
                    const std::vector<Tensor>& dropout_masks) {
    CriticVars vars = make_critic_vars(p);
    Bindings b;
    bind_critic(b, vars, p);
    Expr pv = variable("packed", packed.rows(), packed.cols());
    b.set(pv, packed);
    std::vector<Expr> mask_vars;
    for (size_t l = 0; l < dropout_masks.size(); ++l) {
        Expr mv = variable("mask" + std::to_string(l), dropout_masks[l].rows(),
                           dropout_masks[l].cols());
        b.set(mv, dropout_masks[l]);
        mask_vars.push_back(mv);
    }
    return evaluate(critic_score_expr(cfg, vars, pv, mask_vars), b);
}

double critic_loss(const Tensor& x_real, const Tensor& x_fake, const CriticParams& p,
                   const CriticConfig& cfg, Rng& rng) {
    cfg.validate();
    Tensor real_p = pack(x_real, cfg.pac);
    Tensor fake_p = pack(x_fake, cfg.pac);
    if (real_p.rows() != fake_p.rows())
        throw DataError("critic_loss: real and fake packed batch sizes differ");
    const Eigen::Index packs = real_p.rows();

    // interpolates: eps per packed row
    Tensor x_hat(packs, real_p.cols());
    for (Eigen::Index i = 0; i < packs; ++i) {
        double e = rng.uniform();
        x_hat.row(i) = e * real_p.row(i) + (1.0 - e) * fake_p.row(i);
    }

    CriticVars vars = make_critic_vars(p);
    Bindings b;
    bind_critic(b, vars, p);
    Expr rv = variable("x_real", packs, real_p.cols());
    Expr fv = variable("x_fake", packs, fake_p.cols());
    Expr hv = variable("x_hat", packs, real_p.cols());
    b.set(rv, real_p);
    b.set(fv, fake_p);
    b.set(hv, x_hat);

    std::vector<Expr> masks_real, masks_fake, masks_pen;
    const int hidden = static_cast<int>(cfg.hidden_dims.size());
    for (int l = 0; l < hidden; ++l) {
        Eigen::Index w = cfg.hidden_dims[l];
        Expr mr = variable("mask_r" + std::to_string(l), packs, w);
        Expr mf = variable("mask_f" + std::to_string(l), packs, w);
        b.set(mr, sample_dropout_mask(packs, w, cfg.dropout_p, rng));
        b.set(mf, sample_dropout_mask(packs, w, cfg.dropout_p, rng));
        masks_real.push_back(mr);
        masks_fake.push_back(mf);
        if (cfg.dropout_in_penalty) {
            Expr mp = variable("mask_p" + std::to_string(l), packs, w);
            b.set(mp, sample_dropout_mask(packs, w, cfg.dropout_p, rng));
            masks_pen.push_back(mp);
        }
    }

    Expr s_real = critic_score_expr(cfg, vars, rv, masks_real);
    Expr s_fake = critic_score_expr(cfg, vars, fv, masks_fake);
    Expr s_hat = critic_score_expr(cfg, vars, hv, masks_pen);
    Expr penalty = gradient_norm_penalty_expr(s_hat, hv);
    Expr loss = add(sub(mean(s_fake), mean(s_real)), scalar_mul(penalty, cfg.gp_lambda));
    return evaluate(loss, b)(0, 0);
}

double generator_loss(const Tensor& x_fake, const CriticParams& p, const CriticConfig& cfg) {
    Tensor fake_p = pack(x_fake, cfg.pac);
    Tensor scores = critic_score(cfg, p, fake_p);
    return -scores.mean();
}

} // namespace dagwgan
