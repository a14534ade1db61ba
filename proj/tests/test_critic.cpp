// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dagwgan/critic.hpp"
#include "helpers.hpp"
#include "wasserstein_check.hpp"

#include <cstring>

using namespace dagwgan;
using dagwgan::testing::grad_vs_fd;
using dagwgan::testing::random_tensor;

namespace {

// single linear layer critic: score = x . w + b
CriticParams linear_critic(const Tensor& w, double bias) {
    CriticParams p;
    p.mlp.weights = {w};
    Tensor b(1, 1);
    b(0, 0) = bias;
    p.mlp.biases = {b};
    p.mlp.hidden_act = Activation::kLeakyRelu;
    return p;
}

} // namespace

TEST_CASE("pack") {
    Rng rng(1);
    Tensor batch = random_tensor(4, 3, rng);
    SUBCASE("pac = 1 is the identity reshape") {
        Tensor p = pack(batch, 1);
        CHECK(p.rows() == 4);
        CHECK(p.cols() == 3);
        CHECK(std::memcmp(p.data(), batch.data(), sizeof(double) * batch.size()) == 0);
    }
    SUBCASE("4 samples, pac = 2: widths doubled") {
        Tensor p = pack(batch, 2);
        CHECK(p.rows() == 2);
        CHECK(p.cols() == 6);
        CHECK(p(0, 0) == batch(0, 0));
        CHECK(p(0, 3) == batch(1, 0)); // second sample concatenated
        CHECK(p(1, 5) == batch(3, 2));
    }
    SUBCASE("5 samples, pac = 2: one dropped") {
        Tensor five = random_tensor(5, 3, rng);
        Tensor p = pack(five, 2);
        CHECK(p.rows() == 2);
        CHECK(p.cols() == 6);
    }
    SUBCASE("empty batch is an error") {
        Tensor empty(0, 3);
        CHECK_THROWS_AS(pack(empty, 2), DataError);
    }
}

TEST_CASE("critic_score") {
    CriticConfig cfg;
    cfg.pac = 1;
    cfg.hidden_dims = {};
    SUBCASE("zero weights: every score equals the final bias") {
        CriticParams p = linear_critic(Tensor::Zero(3, 1), 2.5);
        Rng rng(2);
        Tensor scores = critic_score(cfg, p, random_tensor(6, 3, rng));
        for (int i = 0; i < 6; ++i) CHECK(scores(i, 0) == doctest::Approx(2.5));
    }
    SUBCASE("linear critic: w . x") {
        CriticParams p = linear_critic(tensor_from({{1}, {1}}), 0.0);
        Tensor scores = critic_score(cfg, p, tensor_from({{3, 4}}));
        CHECK(scores(0, 0) == doctest::Approx(7.0));
    }
    SUBCASE("dropout_p = 0 masks are a no-op") {
        CriticConfig deep;
        deep.pac = 1;
        deep.hidden_dims = {8};
        deep.dropout_p = 0.0;
        Rng rng(3);
        CriticParams p = init_critic(deep, 4, rng);
        Tensor x = random_tensor(5, 4, rng);
        Tensor ones_mask = sample_dropout_mask(5, 8, 0.0, rng);
        Tensor with_mask = critic_score(deep, p, x, {ones_mask});
        Tensor without = critic_score(deep, p, x);
        CHECK((with_mask - without).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("critic_loss examples") {
    SUBCASE("constant critic: L_D = lambda") {
        CriticConfig cfg;
        cfg.pac = 2;
        cfg.hidden_dims = {};
        cfg.gp_lambda = 10.0;
        CriticParams p = linear_critic(Tensor::Zero(6, 1), 3.0); // D == 3
        Rng rng(4);
        Tensor real = random_tensor(8, 3, rng);
        Tensor fake = random_tensor(8, 3, rng);
        CHECK(critic_loss(real, fake, p, cfg, rng) == doctest::Approx(10.0));
    }
    SUBCASE("identical batches and a unit-norm linear critic: L_D = 0") {
        CriticConfig cfg;
        cfg.pac = 1;
        cfg.hidden_dims = {};
        Tensor w(2, 1);
        w << 0.6, 0.8;
        CriticParams p = linear_critic(w, 0.0);
        Rng rng(5);
        Tensor x = random_tensor(10, 2, rng);
        CHECK(critic_loss(x, x, p, cfg, rng) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("lambda = 0 linear critic: L_D = w . (mean fake - mean real)") {
        CriticConfig cfg;
        cfg.pac = 1;
        cfg.hidden_dims = {};
        cfg.gp_lambda = 0.0;
        Tensor w(2, 1);
        w << 1.5, -2.0;
        CriticParams p = linear_critic(w, 0.7);
        Rng rng(6);
        Tensor real = random_tensor(12, 2, rng);
        Tensor fake = random_tensor(12, 2, rng);
        Eigen::RowVector2d diff = fake.colwise().mean() - real.colwise().mean();
        double want = diff(0) * w(0, 0) + diff(1) * w(1, 0); // biases cancel
        CHECK(critic_loss(real, fake, p, cfg, rng) == doctest::Approx(want));
    }
}

TEST_CASE("generator_loss examples") {
    CriticConfig cfg;
    cfg.pac = 1;
    cfg.hidden_dims = {};
    Rng rng(7);
    SUBCASE("constant critic: L_G = -c") {
        CriticParams p = linear_critic(Tensor::Zero(3, 1), 4.2);
        CHECK(generator_loss(random_tensor(6, 3, rng), p, cfg) == doctest::Approx(-4.2));
    }
    SUBCASE("duplicating the batch leaves L_G unchanged") {
        CriticParams p = linear_critic(tensor_from({{0.3}, {-1.1}, {0.9}}), 0.2);
        Tensor fake = random_tensor(5, 3, rng);
        Tensor doubled(10, 3);
        doubled << fake, fake;
        CHECK(generator_loss(fake, p, cfg) ==
              doctest::Approx(generator_loss(doubled, p, cfg)));
    }
}

TEST_CASE("L_D gradient w.r.t. critic params matches finite differences") {
    using namespace ad;
    CriticConfig cfg;
    cfg.pac = 2;
    cfg.hidden_dims = {6, 4};
    cfg.dropout_p = 0.0; // dropout off for the check
    Rng rng(8);
    CriticParams critic = init_critic(cfg, 3, rng);
    CriticVars vars = make_critic_vars(critic);
    const int packs = 4, pw = 6;

    Expr xr = variable("xr", packs, pw);
    Expr xf = variable("xf", packs, pw);
    Expr xh = variable("xh", packs, pw);
    Bindings b;
    bind_critic(b, vars, critic);
    Tensor real = random_tensor(packs, pw, rng);
    Tensor fake = random_tensor(packs, pw, rng);
    Tensor x_hat(packs, pw);
    for (int i = 0; i < packs; ++i) {
        double e = rng.uniform(); // fixed interpolation draw
        x_hat.row(i) = e * real.row(i) + (1.0 - e) * fake.row(i);
    }
    b.set(xr, real);
    b.set(xf, fake);
    b.set(xh, x_hat);

    Expr l_d = add(sub(mean(critic_score_expr(cfg, vars, xf)),
                       mean(critic_score_expr(cfg, vars, xr))),
                   scalar_mul(gradient_norm_penalty_expr(critic_score_expr(cfg, vars, xh), xh),
                              cfg.gp_lambda));
    for (const Expr& v : vars.all()) {
        INFO("wrt " << v.name());
        CHECK(grad_vs_fd(l_d, v, b) < 1e-3);
    }

    // determinism for fixed eps and masks
    Tensor v1 = evaluate(l_d, b);
    Tensor v2 = evaluate(l_d, b);
    CHECK(std::memcmp(v1.data(), v2.data(), sizeof(double)) == 0);
}

TEST_CASE("Wasserstein ordering: distant fakes score a larger distance") {
    int wins = 0;
    double far_sum = 0.0, near_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double far = dagwgan::testing::trained_critic_distance(3.0, seed);
        double near = dagwgan::testing::trained_critic_distance(0.5, seed);
        far_sum += far;
        near_sum += near;
        if (far > near) ++wins;
    }
    CHECK(wins >= 4);
    CHECK(far_sum > near_sum);
}
