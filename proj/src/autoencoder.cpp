// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/autoencoder.hpp"

namespace dagwgan {

using namespace ad;

void AeConfig::validate() const {
    if (num_nodes < 2) throw DataError("AeConfig: num_nodes must be >= 2");
    if (node_dim < 1) throw DataError("AeConfig: node_dim must be >= 1");
    if (!cardinalities.empty()) {
        if (static_cast<int>(cardinalities.size()) != num_nodes)
            throw DataError("AeConfig: cardinalities size != num_nodes");
        for (int c : cardinalities)
            if (c < 1 || c > node_dim)
                throw DataError("AeConfig: cardinality out of [1, node_dim]");
    }
    for (int hdim : hidden_dims)
        if (hdim < 1) throw DataError("AeConfig: hidden width must be >= 1");
}

AeParams init_ae(const AeConfig& cfg, Rng& rng) {
    cfg.validate();
    AeParams p;
    if (cfg.a_random_init) {
        p.A = Tensor(cfg.num_nodes, cfg.num_nodes);
        for (Eigen::Index i = 0; i < p.A.size(); ++i) p.A.data()[i] = rng.uniform(-0.1, 0.1);
        p.A.diagonal().setZero();
    } else {
        p.A = Tensor::Zero(cfg.num_nodes, cfg.num_nodes);
    }
    std::vector<int> dims;
    dims.push_back(cfg.node_dim);
    for (int hdim : cfg.hidden_dims) dims.push_back(hdim);
    dims.push_back(cfg.node_dim);
    if (!cfg.hidden_dims.empty()) {
        Rng r1 = rng.split(101), r2 = rng.split(102);
        p.f1 = init_mlp(dims, Activation::kTanh, r1);
        p.f2 = init_mlp(dims, Activation::kTanh, r2);
    }
    p.node_bias = Tensor::Zero(cfg.num_nodes, cfg.node_dim);
    return p;
}

std::vector<Expr> AeVars::all() const {
    std::vector<Expr> v{A};
    for (const auto& e : f1.all()) v.push_back(e);
    for (const auto& e : f2.all()) v.push_back(e);
    if (node_bias.valid()) v.push_back(node_bias);
    return v;
}

AeVars make_ae_vars(const AeConfig& cfg, const AeParams& p) {
    AeVars v;
    v.A = variable("A", cfg.num_nodes, cfg.num_nodes);
    v.f1 = make_mlp_vars("f1", p.f1);
    v.f2 = make_mlp_vars("f2", p.f2);
    if (cfg.node_bias) v.node_bias = variable("node_bias", cfg.num_nodes, cfg.node_dim);
    return v;
}

void bind_ae(ad::Bindings& b, const AeVars& vars, const AeParams& p) {
    b.set(vars.A, p.A);
    bind_mlp(b, vars.f1, p.f1);
    bind_mlp(b, vars.f2, p.f2);
    if (vars.node_bias.valid()) b.set(vars.node_bias, p.node_bias);
}

namespace {

Expr i_minus_a(const Expr& A) {
    return sub(identity_const(A.rows()), A);
}

// softmax mask: 0 on live logits, a large negative constant on padding
std::optional<Tensor> padding_mask(const AeConfig& cfg) {
    if (cfg.cardinalities.empty()) return std::nullopt;
    bool any = false;
    Tensor mask = Tensor::Zero(cfg.num_nodes, cfg.node_dim);
    for (int j = 0; j < cfg.num_nodes; ++j)
        for (int k = cfg.cardinalities[j]; k < cfg.node_dim; ++k) {
            mask(j, k) = -1e30;
            any = true;
        }
    if (!any) return std::nullopt;
    return mask;
}

} // namespace

Expr encode_expr(const AeConfig& cfg, const AeVars& vars, const Expr& X, int batch) {
    if (X.rows() != batch || X.cols() != cfg.width())
        throw ShapeError("encode: X must be batch x (num_nodes*node_dim)");
    Expr nodes = split_rows(X, cfg.num_nodes); // (n*m) x d
    MlpParams meta;
    meta.hidden_act = Activation::kTanh;
    Expr h = mlp_forward(nodes, vars.f1, meta);
    Expr dims = nodes_to_dims(h, batch, cfg.num_nodes, cfg.node_dim); // (n*d) x m
    return matmul(dims, i_minus_a(vars.A));
}

Expr decode_expr(const AeConfig& cfg, const AeVars& vars, const Expr& Z, int batch) {
    if (Z.rows() != static_cast<Eigen::Index>(batch) * cfg.node_dim ||
        Z.cols() != cfg.num_nodes)
        throw ShapeError("decode: Z must be (batch*node_dim) x num_nodes");
    Expr ima = i_minus_a(vars.A);
    // S = Z (I-A)^{-1}, via S^T = (I-A)^{-T} Z^T
    Expr st = linear_solve(transpose(ima), transpose(Z),
                           "decoder system (I - A^T); check the adjacency A");
    Expr s = transpose(st);
    Expr nodes = dims_to_nodes(s, batch, cfg.num_nodes, cfg.node_dim); // (n*m) x d
    MlpParams meta;
    meta.hidden_act = Activation::kTanh;
    Expr h = mlp_forward(nodes, vars.f2, meta);
    if (vars.node_bias.valid()) h = add(h, tile_rows(vars.node_bias, batch));
    if (cfg.data_mode == DataMode::kDiscrete) {
        if (auto mask = padding_mask(cfg))
            h = add(h, tile_rows(constant(*mask), batch));
        h = softmax_rows(h);
    }
    return merge_rows(h, cfg.num_nodes); // n x (m*d)
}

Expr reconstruction_loss_expr(const Expr& X, const Expr& M_X, int batch) {
    return scalar_mul(sum(square(sub(X, M_X))), 0.5 / static_cast<double>(batch));
}

Expr latent_regularizer_expr(const Expr& Z, int batch) {
    return scalar_mul(sum(square(Z)), 0.5 / static_cast<double>(batch));
}

Expr cross_entropy_expr(const Expr& X_onehot, const Expr& P_X, int batch) {
    return scalar_mul(sum(hadamard(X_onehot, log_clamped(P_X))),
                      -1.0 / static_cast<double>(batch));
}

// ---- value-level convenience ----

namespace {

struct AeGraphCache {
    AeVars vars;
    ad::Bindings bindings;
};

AeGraphCache prepare(const AeConfig& cfg, const AeParams& p) {
    AeGraphCache g;
    g.vars = make_ae_vars(cfg, p);
    bind_ae(g.bindings, g.vars, p);
    return g;
}

} // namespace

Tensor encode(const AeConfig& cfg, const AeParams& p, const Tensor& X) {
    const int n = static_cast<int>(X.rows());
    AeGraphCache g = prepare(cfg, p);
    Expr xv = variable("X", n, cfg.width());
    g.bindings.set(xv, X);
    Expr z = encode_expr(cfg, g.vars, xv, n);
    // return in the public n x (m*d) layout
    Expr z_nodes = dims_to_nodes(z, n, cfg.num_nodes, cfg.node_dim);
    return evaluate(merge_rows(z_nodes, cfg.num_nodes), g.bindings);
}

Tensor decode(const AeConfig& cfg, const AeParams& p, const Tensor& Z) {
    const int n = static_cast<int>(Z.rows());
    AeGraphCache g = prepare(cfg, p);
    Expr zv = variable("Z", n, cfg.width());
    g.bindings.set(zv, Z);
    Expr z_dims = nodes_to_dims(split_rows(zv, cfg.num_nodes), n, cfg.num_nodes, cfg.node_dim);
    return evaluate(decode_expr(cfg, g.vars, z_dims, n), g.bindings);
}

double reconstruction_loss(const Tensor& X, const Tensor& M_X) {
    if (X.rows() != M_X.rows() || X.cols() != M_X.cols())
        throw ShapeError("reconstruction_loss: shape mismatch");
    return 0.5 * (X - M_X).squaredNorm() / static_cast<double>(X.rows());
}

double latent_regularizer(const Tensor& M_Z) {
    return 0.5 * M_Z.squaredNorm() / static_cast<double>(M_Z.rows());
}

double cross_entropy_loss(const Tensor& X_onehot, const Tensor& P_X) {
    if (X_onehot.rows() != P_X.rows() || X_onehot.cols() != P_X.cols())
        throw ShapeError("cross_entropy_loss: shape mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < X_onehot.rows(); ++i)
        for (Eigen::Index j = 0; j < X_onehot.cols(); ++j)
            if (X_onehot(i, j) != 0.0)
                total -= X_onehot(i, j) * std::log(std::max(P_X(i, j), 1e-12));
    return total / static_cast<double>(X_onehot.rows());
}

} // namespace dagwgan
