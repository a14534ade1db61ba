// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/trainer.hpp"

#include <cmath>

namespace dagwgan {

using namespace ad;

AdamState make_adam_state(const std::vector<const Tensor*>& params, double lr, AdamConfig cfg) {
    AdamState st;
    st.lr = lr;
    st.cfg = cfg;
    for (const Tensor* p : params) {
        st.m.push_back(Tensor::Zero(p->rows(), p->cols()));
        st.v.push_back(Tensor::Zero(p->rows(), p->cols()));
    }
    return st;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& st) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw ShapeError("adam_step: parameter/gradient/state sizes differ");
    ++st.step;
    const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (size_t i = 0; i < params.size(); ++i) {
        const Tensor& g = grads[i];
        if (!g.allFinite())
            throw EvalError("adam_step: non-finite gradient for parameter " +
                            std::to_string(i) + " (max |g| = " +
                            std::to_string(g.cwiseAbs().maxCoeff()) + ")");
        if (g.rows() != params[i]->rows() || g.cols() != params[i]->cols())
            throw ShapeError("adam_step: gradient shape mismatch at parameter " +
                             std::to_string(i));
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * g.cwiseProduct(g);
        Tensor mhat = st.m[i] / c1;
        Tensor vhat = st.v[i] / c2;
        params[i]->noalias() -=
            st.lr * mhat.cwiseQuotient(vhat.cwiseSqrt() + Tensor::Constant(
                                                              g.rows(), g.cols(), st.cfg.eps));
    }
}

void TrainConfig::validate() const {
    if (epochs_per_outer < 1) throw DataError("TrainConfig: epochs_per_outer must be >= 1");
    if (max_outer_iters < 1) throw DataError("TrainConfig: max_outer_iters must be >= 1");
    if (n_critic < 0) throw DataError("TrainConfig: n_critic must be >= 0");
    if (batch_size < 1) throw DataError("TrainConfig: batch_size must be >= 1");
    if (!(lr > 0.0)) throw DataError("TrainConfig: lr must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
        throw DataError("TrainConfig: lr_decay must be in (0, 1]");
    if (!(h_tolerance > 0.0 && h_tolerance < 1.0))
        throw DataError("TrainConfig: h_tolerance must be in (0, 1)");
    if (!(rho_max >= 1.0)) throw DataError("TrainConfig: rho_max must be >= 1");
    if (gen_loss_weight < 0.0) throw DataError("TrainConfig: gen_loss_weight must be >= 0");
}

void ExperimentConfig::validate() const {
    train.validate();
    ae.validate();
    critic.validate();
    if (acyclicity_alpha < 0.0) throw DataError("ExperimentConfig: alpha must be >= 0");
    if (edge_tau < 0.0) throw DataError("ExperimentConfig: edge_tau must be >= 0");
    if (train.standardize && ae.data_mode == DataMode::kDiscrete)
        throw DataError("ExperimentConfig: standardize applies to continuous data only");
}

double lr_schedule(int outer_iter, const TrainConfig& cfg) {
    if (outer_iter < 0) throw DataError("lr_schedule: outer_iter must be >= 0");
    return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(outer_iter));
}

void auglag_update(AugLagState& st, double h, double rho_max) {
    st.multiplier += st.rho * h;
    if (h > 0.25 * st.h_prev) st.rho = std::min(st.rho * 10.0, rho_max);
    st.h_prev = h;
}

Tensor standardize_columns(const Tensor& data) {
    Tensor out = data;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        double mean = out.col(j).mean();
        out.col(j).array() -= mean;
        double var = out.col(j).squaredNorm() / std::max<double>(1, out.rows() - 1);
        double sd = std::sqrt(var);
        if (sd > 0.0) out.col(j) /= sd;
    }
    return out;
}

// ---- Trainer ----

namespace {

// purpose tags for derived rng streams; streams are independent of how many
// draws other purposes consumed, which keeps variants with fewer draws
// (e.g. ae_only) aligned with full runs
enum StreamTag : int {
    kTagShuffle = 1,
    kTagCriticZ = 2,
    kTagEps = 3,
    kTagMaskReal = 4,
    kTagMaskFake = 5,
    kTagMaskPen = 6,
    kTagGenZ = 7,
    kTagMaskGen = 8,
};

Tensor draw_normal(Eigen::Index rows, Eigen::Index cols, Rng rng) {
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.normal();
    return t;
}

Tensor packed_view(const Tensor& batch, int pac) {
    return Eigen::Map<const Tensor>(batch.data(), batch.rows() / pac,
                                    batch.cols() * pac);
}

} // namespace

struct Trainer::Impl {
    ExperimentConfig cfg;
    Tensor data;
    int n = 0, m = 0, d = 0, width = 0;
    int batch = 0, packs = 0, pack_width = 0, n_batches = 0;
    Rng root{0};

    AeParams ae;
    CriticParams critic;
    AugLagState auglag;
    AdamState ae_adam, critic_adam;

    AeVars ae_vars;
    CriticVars critic_vars;
    Expr x_var, z_var, xr_var, xf_var, xh_var, mult_var, rho_var;
    std::vector<Expr> masks_r, masks_f, masks_p, masks_g;
    Expr fake_full;
    std::vector<Expr> critic_roots; // {L_D, grads...}
    std::vector<Expr> gen_roots;    // {L_R, L_G, grads...}

    int outer = 0;
    int total_epoch = 0;

    AeParams ae_snap;
    CriticParams critic_snap;
    AdamState ae_adam_snap, critic_adam_snap;

    explicit Impl(Tensor data_in, ExperimentConfig cfg_in)
        : cfg(std::move(cfg_in)), data(std::move(data_in)), root(cfg.train.seed) {
        cfg.validate();
        m = cfg.ae.num_nodes;
        d = cfg.ae.node_dim;
        width = m * d;
        n = static_cast<int>(data.rows());
        if (data.cols() != width)
            throw DataError("Trainer: data has " + std::to_string(data.cols()) +
                            " columns, expected num_nodes*node_dim = " + std::to_string(width));
        ensure_finite(data, "training data");
        if (cfg.train.standardize) data = standardize_columns(data);

        const int pac = cfg.ae_only ? 1 : cfg.critic.pac;
        batch = std::min(cfg.train.batch_size, n);
        batch -= batch % pac;
        if (batch < 1)
            throw DataError("Trainer: batch_size/pac leave no usable batch (n=" +
                            std::to_string(n) + ", pac=" + std::to_string(pac) + ")");
        packs = batch / pac;
        pack_width = pac * width;
        n_batches = n / batch;

        Rng ae_rng = root.split(900001);
        Rng cr_rng = root.split(900002);
        ae = init_ae(cfg.ae, ae_rng);
        critic = init_critic(cfg.critic, width, cr_rng);

        build_graphs();

        ae_adam = make_adam_state(ae_const_ptrs(), cfg.train.lr);
        critic_adam = make_adam_state(critic_const_ptrs(), cfg.train.lr);
        snapshot();
    }

    std::vector<Tensor*> ae_ptrs() {
        std::vector<Tensor*> v{&ae.A};
        for (auto& w : ae.f1.weights) v.push_back(&w);
        for (auto& b : ae.f1.biases) v.push_back(&b);
        for (auto& w : ae.f2.weights) v.push_back(&w);
        for (auto& b : ae.f2.biases) v.push_back(&b);
        if (cfg.ae.node_bias) v.push_back(&ae.node_bias);
        return v;
    }
    std::vector<const Tensor*> ae_const_ptrs() {
        std::vector<const Tensor*> v;
        for (Tensor* t : ae_ptrs()) v.push_back(t);
        return v;
    }
    std::vector<Tensor*> critic_ptrs() {
        std::vector<Tensor*> v;
        for (auto& w : critic.mlp.weights) v.push_back(&w);
        for (auto& b : critic.mlp.biases) v.push_back(&b);
        return v;
    }
    std::vector<const Tensor*> critic_const_ptrs() {
        std::vector<const Tensor*> v;
        for (Tensor* t : critic_ptrs()) v.push_back(t);
        return v;
    }

    void build_graphs() {
        ae_vars = make_ae_vars(cfg.ae, ae);
        x_var = variable("X", batch, width);
        z_var = variable("Z_prior", static_cast<Eigen::Index>(batch) * d, m);
        mult_var = variable("auglag_multiplier", 1, 1);
        rho_var = variable("auglag_rho", 1, 1);

        Expr z_enc = encode_expr(cfg.ae, ae_vars, x_var, batch);
        Expr m_x = decode_expr(cfg.ae, ae_vars, z_enc, batch);
        Expr l_rec = cfg.ae.data_mode == DataMode::kDiscrete
                         ? cross_entropy_expr(x_var, m_x, batch)
                         : reconstruction_loss_expr(x_var, m_x, batch);
        Expr l_r = add(l_rec, latent_regularizer_expr(z_enc, batch));
        Expr h = acyclicity_expr(ae_vars.A, cfg.alpha());
        Expr constraint =
            add(hadamard(mult_var, h), scalar_mul(hadamard(rho_var, square(h)), 0.5));

        Expr l_g = constant_scalar(0.0);
        Expr l_total;
        if (cfg.ae_only) {
            l_total = add(l_r, constraint);
        } else {
            critic_vars = make_critic_vars(critic);
            Expr fake = cfg.fake_from_reconstruction
                            ? m_x
                            : decode_expr(cfg.ae, ae_vars, z_var, batch);
            fake_full = fake;
            Expr fake_packed = merge_rows(fake, cfg.critic.pac);
            for (size_t l = 0; l < cfg.critic.hidden_dims.size(); ++l)
                masks_g.push_back(variable("mask_g" + std::to_string(l), packs,
                                           cfg.critic.hidden_dims[l]));
            Expr s_gen = critic_score_expr(cfg.critic, critic_vars, fake_packed, masks_g);
            l_g = scalar_mul(mean(s_gen), -1.0);
            l_total = add(add(l_r, scalar_mul(l_g, cfg.train.gen_loss_weight)), constraint);
        }

        std::vector<Expr> ae_var_list = ae_vars.all();
        std::vector<Expr> ae_grads = gradient_exprs(l_total, ae_var_list);
        gen_roots = {l_r, l_g};
        gen_roots.insert(gen_roots.end(), ae_grads.begin(), ae_grads.end());

        if (!cfg.ae_only) {
            xr_var = variable("x_real_packed", packs, pack_width);
            xf_var = variable("x_fake_packed", packs, pack_width);
            xh_var = variable("x_hat_packed", packs, pack_width);
            for (size_t l = 0; l < cfg.critic.hidden_dims.size(); ++l) {
                Eigen::Index w = cfg.critic.hidden_dims[l];
                masks_r.push_back(variable("mask_r" + std::to_string(l), packs, w));
                masks_f.push_back(variable("mask_f" + std::to_string(l), packs, w));
                if (cfg.critic.dropout_in_penalty)
                    masks_p.push_back(variable("mask_p" + std::to_string(l), packs, w));
            }
            Expr s_real = critic_score_expr(cfg.critic, critic_vars, xr_var, masks_r);
            Expr s_fake = critic_score_expr(cfg.critic, critic_vars, xf_var, masks_f);
            Expr s_hat = critic_score_expr(cfg.critic, critic_vars, xh_var, masks_p);
            Expr penalty = gradient_norm_penalty_expr(s_hat, xh_var);
            Expr l_d = add(sub(mean(s_fake), mean(s_real)),
                           scalar_mul(penalty, cfg.critic.gp_lambda));
            std::vector<Expr> critic_var_list = critic_vars.all();
            std::vector<Expr> critic_grads = gradient_exprs(l_d, critic_var_list);
            critic_roots = {l_d};
            critic_roots.insert(critic_roots.end(), critic_grads.begin(), critic_grads.end());
        }
    }

    Rng stream(int tag, int bidx, int k) const {
        return root.split(static_cast<std::uint64_t>(outer) + 1)
            .split(static_cast<std::uint64_t>(total_epoch))
            .split(static_cast<std::uint64_t>(bidx))
            .split(static_cast<std::uint64_t>(tag) * 131 + static_cast<std::uint64_t>(k));
    }

    Tensor gather_batch(const std::vector<std::size_t>& idx, int b) const {
        Tensor out(batch, width);
        for (int i = 0; i < batch; ++i)
            out.row(i) = data.row(static_cast<Eigen::Index>(idx[b * batch + i]));
        return out;
    }

    void snapshot() {
        ae_snap = ae;
        critic_snap = critic;
        ae_adam_snap = ae_adam;
        critic_adam_snap = critic_adam;
    }

    void restore() {
        ae = ae_snap;
        critic = critic_snap;
        ae_adam = ae_adam_snap;
        critic_adam = critic_adam_snap;
    }

    double current_h() const {
        return acyclicity_h(ae.A, AcyclicityConfig{cfg.alpha()});
    }

    EpochRecord inner_epoch() {
        std::vector<std::size_t> idx = stream(kTagShuffle, 0, 0).permutation(n);
        double sum_ld = 0.0, sum_lg = 0.0, sum_lr = 0.0;
        long ld_count = 0;

        Tensor mult_t(1, 1), rho_t(1, 1);
        mult_t(0, 0) = auglag.multiplier;
        rho_t(0, 0) = auglag.rho;

        for (int b = 0; b < n_batches; ++b) {
            Tensor x_b = gather_batch(idx, b);

            if (!cfg.ae_only && cfg.train.n_critic > 0) {
                Tensor real_p = packed_view(x_b, cfg.critic.pac);
                for (int k = 0; k < cfg.train.n_critic; ++k) {
                    Tensor z = draw_normal(static_cast<Eigen::Index>(batch) * d, m,
                                           stream(kTagCriticZ, b, k));
                    Bindings fb;
                    bind_ae(fb, ae_vars, ae);
                    fb.set(z_var, z);
                    if (cfg.fake_from_reconstruction) fb.set(x_var, x_b);
                    Tensor fake = evaluate(fake_full, fb);
                    Tensor fake_p = packed_view(fake, cfg.critic.pac);

                    Rng eps_rng = stream(kTagEps, b, k);
                    Tensor x_hat(packs, pack_width);
                    for (int r = 0; r < packs; ++r) {
                        double e = eps_rng.uniform();
                        x_hat.row(r) = e * real_p.row(r) + (1.0 - e) * fake_p.row(r);
                    }

                    Bindings cb;
                    bind_critic(cb, critic_vars, critic);
                    cb.set(xr_var, real_p);
                    cb.set(xf_var, fake_p);
                    cb.set(xh_var, x_hat);
                    Rng mr = stream(kTagMaskReal, b, k);
                    Rng mf = stream(kTagMaskFake, b, k);
                    Rng mp = stream(kTagMaskPen, b, k);
                    for (size_t l = 0; l < masks_r.size(); ++l) {
                        cb.set(masks_r[l], sample_dropout_mask(packs, masks_r[l].cols(),
                                                               cfg.critic.dropout_p, mr));
                        cb.set(masks_f[l], sample_dropout_mask(packs, masks_f[l].cols(),
                                                               cfg.critic.dropout_p, mf));
                        if (!masks_p.empty())
                            cb.set(masks_p[l], sample_dropout_mask(packs, masks_p[l].cols(),
                                                                   cfg.critic.dropout_p, mp));
                    }
                    std::vector<Tensor> vals = evaluate_many(critic_roots, cb);
                    sum_ld += vals[0](0, 0);
                    ++ld_count;
                    std::vector<Tensor> grads(vals.begin() + 1, vals.end());
                    adam_step(critic_ptrs(), grads, critic_adam);
                }
            }

            // joint encoder/decoder update
            Bindings gb;
            bind_ae(gb, ae_vars, ae);
            gb.set(x_var, x_b);
            gb.set(mult_var, mult_t);
            gb.set(rho_var, rho_t);
            if (!cfg.ae_only) {
                bind_critic(gb, critic_vars, critic);
                if (!cfg.fake_from_reconstruction)
                    gb.set(z_var, draw_normal(static_cast<Eigen::Index>(batch) * d, m,
                                              stream(kTagGenZ, b, 0)));
                Rng mg = stream(kTagMaskGen, b, 0);
                for (auto& mv : masks_g)
                    gb.set(mv, sample_dropout_mask(packs, mv.cols(), cfg.critic.dropout_p, mg));
            }
            std::vector<Tensor> vals = evaluate_many(gen_roots, gb);
            sum_lr += vals[0](0, 0);
            sum_lg += vals[1](0, 0);
            std::vector<Tensor> grads(vals.begin() + 2, vals.end());
            adam_step(ae_ptrs(), grads, ae_adam);
        }

        EpochRecord rec;
        rec.outer = outer;
        rec.epoch = total_epoch;
        rec.loss_d = ld_count > 0 ? sum_ld / static_cast<double>(ld_count) : 0.0;
        rec.loss_g = n_batches > 0 ? sum_lg / n_batches : 0.0;
        rec.loss_r = n_batches > 0 ? sum_lr / n_batches : 0.0;
        rec.h = current_h();
        rec.lr = ae_adam.lr;
        rec.multiplier = auglag.multiplier;
        rec.rho = auglag.rho;
        ++total_epoch;
        return rec;
    }
};

Trainer::Trainer(Tensor data, ExperimentConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(data), std::move(cfg))) {}

Trainer::~Trainer() = default;

EpochRecord Trainer::inner_epoch() { return impl_->inner_epoch(); }

double Trainer::current_h() const { return impl_->current_h(); }

void Trainer::set_outer(int outer_iter) {
    impl_->outer = outer_iter;
    impl_->auglag.outer_iter = outer_iter;
    double lr = lr_schedule(outer_iter, impl_->cfg.train);
    impl_->ae_adam.lr = lr;
    impl_->critic_adam.lr = lr;
}

void Trainer::set_auglag(const AugLagState& st) { impl_->auglag = st; }

const AeParams& Trainer::ae_params() const { return impl_->ae; }
const CriticParams& Trainer::critic_params() const { return impl_->critic; }
const AugLagState& Trainer::auglag() const { return impl_->auglag; }
const AdamState& Trainer::ae_adam() const { return impl_->ae_adam; }
const AdamState& Trainer::critic_adam() const { return impl_->critic_adam; }
const ExperimentConfig& Trainer::config() const { return impl_->cfg; }

Tensor Trainer::final_adjacency() const {
    Tensor A = impl_->ae.A;
    A.diagonal().setZero();
    return A;
}

TrainResult Trainer::run(const std::function<void(int, const Trainer&)>& on_outer) {
    Impl& im = *impl_;
    TrainResult res;
    const TrainConfig& tc = im.cfg.train;
    bool converged = false;

    for (int outer = 0; outer < tc.max_outer_iters; ++outer) {
        set_outer(outer);
        bool failed = false;
        try {
            for (int e = 0; e < tc.epochs_per_outer; ++e) {
                res.history.push_back(im.inner_epoch());
                im.snapshot();
            }
        } catch (const EvalError& err) {
            im.restore();
            res.aborted = true;
            res.abort_reason = err.what();
            failed = true;
        }
        if (failed) break;
        double h = im.current_h();
        auglag_update(im.auglag, h, tc.rho_max);
        if (on_outer) on_outer(outer, *this);
        if (h < tc.h_tolerance) {
            converged = true;
            break;
        }
    }

    res.ae = im.ae;
    res.critic = im.critic;
    res.A = final_adjacency();
    res.learned_edges = threshold_graph(res.A, im.cfg.edge_tau);
    res.auglag = im.auglag;
    res.converged = converged;
    res.final_h = acyclicity_h(res.A, AcyclicityConfig{im.cfg.alpha()});
    return res;
}

TrainResult augmented_lagrangian_loop(Tensor data, const ExperimentConfig& cfg,
                                      const std::function<void(int, const Trainer&)>& on_outer) {
    Trainer t(std::move(data), cfg);
    return t.run(on_outer);
}

} // namespace dagwgan
