// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dagwgan/autoencoder.hpp"
#include "dagwgan/sem_synth.hpp"
#include "helpers.hpp"

using namespace dagwgan;
using dagwgan::testing::grad_vs_fd;
using dagwgan::testing::random_tensor;
using dagwgan::testing::rel_err;

namespace {

AeConfig identity_cfg(int m, int d = 1) {
    AeConfig cfg;
    cfg.num_nodes = m;
    cfg.node_dim = d;
    return cfg;
}

AeParams zero_params(const AeConfig& cfg) {
    Rng rng(0);
    return init_ae(cfg, rng);
}

} // namespace

TEST_CASE("encode examples") {
    AeConfig cfg = identity_cfg(2);
    AeParams p = zero_params(cfg);

    SUBCASE("A = 0, identity f1: Z = X") {
        Rng rng(1);
        Tensor X = random_tensor(5, 2, rng);
        CHECK(rel_err(encode(cfg, p, X), X) < 1e-14);
    }
    SUBCASE("single edge: the child latent subtracts its parent") {
        p.A = tensor_from({{0, 1}, {0, 0}});
        Tensor X = tensor_from({{1, 1}});
        Tensor Z = encode(cfg, p, X);
        CHECK(Z(0, 0) == doctest::Approx(1.0));
        CHECK(Z(0, 1) == doctest::Approx(0.0));
    }
    SUBCASE("linearity in X for identity f1") {
        Rng rng(2);
        p.A = tensor_from({{0, 0.8}, {0, 0}});
        Tensor X = random_tensor(4, 2, rng);
        Tensor Za = encode(cfg, p, Tensor(3.0 * X));
        Tensor Zb = encode(cfg, p, X);
        CHECK(rel_err(Za, Tensor(3.0 * Zb)) < 1e-12);
    }
}

TEST_CASE("decode examples") {
    SUBCASE("A = 0, identity f2 is the identity") {
        AeConfig cfg = identity_cfg(2);
        AeParams p = zero_params(cfg);
        Tensor Z = tensor_from({{3, 4}});
        CHECK(rel_err(decode(cfg, p, Z), Z) < 1e-14);
    }
    SUBCASE("round trip: decode(encode(X)) = X for acyclic A, identity f") {
        Rng rng(3);
        for (int t = 0; t < 5; ++t) {
            int m = 3 + static_cast<int>(rng.below(4));
            AeConfig cfg = identity_cfg(m);
            AeParams p = zero_params(cfg);
            Rng g = rng.split(t);
            BinaryDag dag = sample_er_dag(m, 2.0, g);
            p.A = assign_weights(dag, 0.1, 0.6, g); // spectral radius < 1
            Tensor X = random_tensor(20, m, g);
            CHECK((decode(cfg, p, encode(cfg, p, X)) - X).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
    SUBCASE("discrete mode: probability rows sum to 1 per node") {
        AeConfig cfg;
        cfg.num_nodes = 3;
        cfg.node_dim = 4;
        cfg.data_mode = DataMode::kDiscrete;
        cfg.hidden_dims = {8};
        Rng rng(4);
        AeParams p = init_ae(cfg, rng);
        Tensor Z = random_tensor(6, cfg.width(), rng);
        Tensor P = decode(cfg, p, Z);
        for (Eigen::Index i = 0; i < P.rows(); ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(P.row(i).segment(j * 4, 4).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("padded categories receive (essentially) zero probability") {
        AeConfig cfg;
        cfg.num_nodes = 2;
        cfg.node_dim = 3;
        cfg.cardinalities = {2, 3};
        cfg.data_mode = DataMode::kDiscrete;
        Rng rng(5);
        AeParams p = init_ae(cfg, rng);
        Tensor Z = random_tensor(4, cfg.width(), rng);
        Tensor P = decode(cfg, p, Z);
        for (Eigen::Index i = 0; i < P.rows(); ++i) CHECK(P(i, 2) == 0.0); // padding of node 0
    }
    SUBCASE("ill-conditioned (I - A^T) names the adjacency") {
        AeConfig cfg = identity_cfg(2);
        AeParams p = zero_params(cfg);
        p.A = tensor_from({{0, 1}, {1, 0}}); // I - A^T singular
        try {
            decode(cfg, p, tensor_from({{1, 1}}));
            FAIL("expected a singular-system error");
        } catch (const SingularError& e) {
            CHECK(std::string(e.what()).find("adjacency A") != std::string::npos);
        }
    }
}

TEST_CASE("loss examples") {
    SUBCASE("reconstruction") {
        Tensor X = tensor_from({{1, 2}});
        CHECK(reconstruction_loss(X, X) == 0.0);
        CHECK(reconstruction_loss(X, Tensor(Tensor::Zero(1, 2))) == doctest::Approx(2.5));
        // scaling the residual by c multiplies the loss by c^2
        Tensor Y = tensor_from({{3, -1}});
        double l1 = reconstruction_loss(X, Y);
        Tensor Y2 = X + 2.0 * (Y - X);
        CHECK(reconstruction_loss(X, Y2) == doctest::Approx(4.0 * l1));
    }
    SUBCASE("latent regularizer") {
        CHECK(latent_regularizer(Tensor::Zero(3, 2)) == 0.0);
        CHECK(latent_regularizer(tensor_from({{1, -2}})) == doctest::Approx(2.5));
        Rng rng(6);
        CHECK(latent_regularizer(random_tensor(4, 4, rng)) >= 0.0);
    }
    SUBCASE("cross entropy") {
        Tensor X = tensor_from({{1, 0, 0, 1}}); // two binary nodes, one-hot
        CHECK(cross_entropy_loss(X, X) == doctest::Approx(0.0));
        Tensor P = tensor_from({{0.5, 0.5, 0.5, 0.5}});
        Tensor X1 = tensor_from({{1, 0, 0, 0}});
        // single node true class 0, uniform over 2: ln 2 (second block contributes 0)
        Tensor Xa = tensor_from({{1, 0}});
        Tensor Pa = tensor_from({{0.5, 0.5}});
        CHECK(cross_entropy_loss(Xa, Pa) == doctest::Approx(std::log(2.0)));
        // uniform over k classes costs ln k per node
        Tensor Xk = tensor_from({{0, 0, 1, 0, 1, 0}});
        Tensor Pk = Tensor::Constant(1, 6, 1.0 / 3.0);
        CHECK(cross_entropy_loss(Xk, Pk) == doctest::Approx(2.0 * std::log(3.0)));
        (void)X1;
        (void)P;
    }
}

TEST_CASE("loss gradients match finite differences") {
    Rng rng(7);
    const int n = 3;

    auto run_check = [&](const AeConfig& cfg, bool discrete) {
        AeParams p = init_ae(cfg, rng);
        // small random A keeps the solve well-conditioned
        p.A = random_tensor(cfg.num_nodes, cfg.num_nodes, rng, -0.25, 0.25);
        p.A.diagonal().setZero();

        AeVars vars = make_ae_vars(cfg, p);
        ad::Bindings b;
        bind_ae(b, vars, p);
        ad::Expr X = ad::variable("X", n, cfg.width());
        Tensor x_val;
        if (discrete) {
            x_val = Tensor::Zero(n, cfg.width());
            Rng cat(17);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < cfg.num_nodes; ++j)
                    x_val(i, j * cfg.node_dim + static_cast<int>(cat.below(cfg.node_dim))) = 1.0;
        } else {
            x_val = random_tensor(n, cfg.width(), rng);
        }
        b.set(X, x_val);

        ad::Expr Z = encode_expr(cfg, vars, X, n);
        ad::Expr MX = decode_expr(cfg, vars, Z, n);
        ad::Expr l_rec = discrete ? cross_entropy_expr(X, MX, n)
                                  : reconstruction_loss_expr(X, MX, n);
        ad::Expr l_reg = latent_regularizer_expr(Z, n);

        for (const ad::Expr& loss : {l_rec, l_reg}) {
            for (const ad::Expr& v : vars.all()) {
                INFO((discrete ? "discrete" : "continuous") << " wrt " << v.name());
                CHECK(grad_vs_fd(loss, v, b) < 1e-4);
            }
        }
    };

    SUBCASE("continuous, MLP f1/f2, num_nodes=4") {
        AeConfig cfg;
        cfg.num_nodes = 4;
        cfg.node_dim = 1;
        cfg.hidden_dims = {5};
        run_check(cfg, false);
    }
    SUBCASE("continuous, identity f, num_nodes=5") {
        AeConfig cfg = identity_cfg(5);
        run_check(cfg, false);
    }
    SUBCASE("discrete, node_dim=3, node bias") {
        AeConfig cfg;
        cfg.num_nodes = 3;
        cfg.node_dim = 3;
        cfg.hidden_dims = {4};
        cfg.data_mode = DataMode::kDiscrete;
        cfg.node_bias = true;
        run_check(cfg, true);
    }
}

TEST_CASE("permutation equivariance of the losses") {
    Rng rng(8);
    const int m = 5, n = 8;
    AeConfig cfg;
    cfg.num_nodes = m;
    cfg.hidden_dims = {6}; // shared weights: permuting nodes must not matter
    AeParams p = init_ae(cfg, rng);
    Rng g = rng.split(9);
    p.A = assign_weights(sample_er_dag(m, 2.0, g), 0.1, 0.5, g);
    Tensor X = random_tensor(n, m, rng);

    Tensor Z = encode(cfg, p, X);
    Tensor MX = decode(cfg, p, Z);
    double rec = reconstruction_loss(X, MX);
    double reg = latent_regularizer(Z);

    auto perm = rng.permutation(m);
    AeParams pp = p;
    Tensor Xp(n, m);
    for (int i = 0; i < m; ++i) {
        Xp.col(i) = X.col(static_cast<Eigen::Index>(perm[i]));
        for (int j = 0; j < m; ++j) pp.A(i, j) = p.A(perm[i], perm[j]);
    }
    Tensor Zp = encode(cfg, pp, Xp);
    Tensor MXp = decode(cfg, pp, Zp);
    CHECK(reconstruction_loss(Xp, MXp) == doctest::Approx(rec).epsilon(1e-10));
    CHECK(latent_regularizer(Zp) == doctest::Approx(reg).epsilon(1e-10));
}
