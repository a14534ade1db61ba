// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dagwgan/sem_synth.hpp"

#include <Eigen/Dense>
#include <cstring>

using namespace dagwgan;

TEST_CASE("sample_er_dag") {
    SUBCASE("m=1 yields the empty graph") {
        Rng rng(1);
        BinaryDag d = sample_er_dag(1, 3.0, rng);
        CHECK(d.m == 1);
        CHECK(d.edges.empty());
    }
    SUBCASE("mean edge count sits in the binomial band") {
        Rng rng(2);
        double total = 0;
        for (int t = 0; t < 1000; ++t) {
            Rng draw = rng.split(t);
            total += static_cast<double>(sample_er_dag(50, 3.0, draw).edges.size());
        }
        double mean = total / 1000.0; // expected 75, 3-sigma band ~ [71, 79]
        CHECK(mean >= 71.0);
        CHECK(mean <= 79.0);
    }
    SUBCASE("every draw is a DAG") {
        Rng rng(3);
        for (int t = 0; t < 100; ++t) {
            Rng draw = rng.split(t);
            int m = 2 + static_cast<int>(draw.below(20));
            BinaryDag d = sample_er_dag(m, std::min(3.0, m - 1.0), draw);
            CHECK(is_dag(d.edges, d.m));
        }
    }
}

TEST_CASE("assign_weights") {
    Rng rng(4);
    SUBCASE("empty dag gives the zero matrix") {
        BinaryDag d = make_dag(4, {});
        Tensor A = assign_weights(d, 0.5, 2.0, rng);
        CHECK(A.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("magnitudes stay in range; non-edges exactly zero") {
        Rng draw = rng.split(1);
        BinaryDag d = sample_er_dag(10, 3.0, draw);
        Tensor A = assign_weights(d, 0.5, 2.0, draw);
        int nonzero = 0;
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            for (Eigen::Index j = 0; j < A.cols(); ++j)
                if (A(i, j) != 0.0) {
                    ++nonzero;
                    CHECK(std::abs(A(i, j)) >= 0.5);
                    CHECK(std::abs(A(i, j)) <= 2.0);
                }
        CHECK(nonzero == static_cast<int>(d.edges.size()));
    }
    SUBCASE("sign balance over ~10^4 edges") {
        Rng draw = rng.split(2);
        long neg = 0, total = 0;
        while (total < 10000) {
            BinaryDag d = sample_er_dag(40, 3.0, draw);
            Tensor A = assign_weights(d, 0.5, 2.0, draw);
            for (Eigen::Index i = 0; i < A.size(); ++i)
                if (A.data()[i] != 0.0) {
                    ++total;
                    if (A.data()[i] < 0.0) ++neg;
                }
        }
        double frac = static_cast<double>(neg) / static_cast<double>(total);
        CHECK(frac >= 0.47);
        CHECK(frac <= 0.53);
    }
}

TEST_CASE("sample_sem") {
    SUBCASE("A=0: white noise moments at n=5000") {
        Rng rng(5);
        Tensor X = sample_sem(Tensor::Zero(4, 4), SemVariant::kLinear, 5000, 1.0, rng);
        Eigen::MatrixXd C = (X.transpose() * X) / 5000.0;
        for (int j = 0; j < 4; ++j) {
            CHECK(std::abs(X.col(j).mean()) < 0.1);
            CHECK(std::abs(C(j, j) - 1.0) < 0.1);
            for (int k = 0; k < j; ++k) CHECK(std::abs(C(j, k)) < 0.1);
        }
    }
    SUBCASE("2-node chain: Var(x1) ~ w^2 + 1") {
        Rng rng(6);
        Tensor A = tensor_from({{0, 1.5}, {0, 0}});
        Tensor X = sample_sem(A, SemVariant::kLinear, 5000, 1.0, rng);
        double var = (X.col(1).array() - X.col(1).mean()).square().sum() / 4999.0;
        CHECK(var == doctest::Approx(1.5 * 1.5 + 1.0).epsilon(0.10));
    }
    SUBCASE("zero noise, zero A: all-zero matrix") {
        Rng rng(7);
        Tensor X = sample_sem(Tensor::Zero(3, 3), SemVariant::kLinear, 10, 0.0, rng);
        CHECK(X.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("cyclic support is rejected") {
        Rng rng(8);
        Tensor A = tensor_from({{0, 1}, {1, 0}});
        CHECK_THROWS_AS(sample_sem(A, SemVariant::kLinear, 5, 1.0, rng), DataError);
    }
    SUBCASE("same seed, bit-identical output; prefixes agree across n") {
        Tensor A = tensor_from({{0, 1.0, 0}, {0, 0, -0.7}, {0, 0, 0}});
        for (SemVariant v :
             {SemVariant::kLinear, SemVariant::kNonlinear1, SemVariant::kNonlinear2}) {
            Rng r1(9), r2(9), r3(9);
            Tensor X1 = sample_sem(A, v, 100, 1.0, r1);
            Tensor X2 = sample_sem(A, v, 100, 1.0, r2);
            CHECK(std::memcmp(X1.data(), X2.data(), sizeof(double) * X1.size()) == 0);
            // per-sample streams: shrinking n keeps the common prefix identical
            Tensor X3 = sample_sem(A, v, 40, 1.0, r3);
            CHECK(std::memcmp(X1.data(), X3.data(), sizeof(double) * X3.size()) == 0);
        }
    }
}

TEST_CASE("OLS on true parents recovers linear SEM weights within 0.1") {
    SemSpec spec;
    spec.m = 8;
    spec.seed = 11;
    SemDraw draw = simulate_sem(spec, 5000);
    for (int j = 0; j < spec.m; ++j) {
        std::vector<int> parents;
        for (int i = 0; i < spec.m; ++i)
            if (draw.weights(i, j) != 0.0) parents.push_back(i);
        if (parents.empty()) continue;
        Eigen::MatrixXd P(5000, parents.size());
        for (size_t k = 0; k < parents.size(); ++k) P.col(k) = draw.data.col(parents[k]);
        Eigen::VectorXd y = draw.data.col(j);
        Eigen::VectorXd beta = (P.transpose() * P).ldlt().solve(P.transpose() * y);
        for (size_t k = 0; k < parents.size(); ++k)
            CHECK(std::abs(beta(k) - draw.weights(parents[k], j)) <= 0.1);
    }
}

TEST_CASE("discrete BN sampling") {
    SUBCASE("single binary node, fair coin") {
        DiscreteBnSpec spec;
        spec.dag = make_dag(1, {});
        spec.cardinalities = {2};
        spec.cpts = {tensor_from({{0.5, 0.5}})};
        Rng rng(12);
        IntMatrix X = sample_discrete_bn(spec, 10000, rng);
        double freq = 0;
        for (int i = 0; i < 10000; ++i) freq += X(i, 0);
        freq /= 10000.0;
        CHECK(freq >= 0.485);
        CHECK(freq <= 0.515);
    }
    SUBCASE("deterministic CPTs give constant columns") {
        DiscreteBnSpec spec;
        spec.dag = make_dag(2, {{0, 1}});
        spec.cardinalities = {3, 3};
        spec.cpts = {tensor_from({{0, 0, 1}}),
                     tensor_from({{1, 0, 0}, {1, 0, 0}, {1, 0, 0}})};
        Rng rng(13);
        IntMatrix X = sample_discrete_bn(spec, 50, rng);
        for (int i = 0; i < 50; ++i) {
            CHECK(X(i, 0) == 2);
            CHECK(X(i, 1) == 0);
        }
    }
    SUBCASE("identity CPT copies the parent") {
        DiscreteBnSpec spec;
        spec.dag = make_dag(2, {{0, 1}});
        spec.cardinalities = {3, 3};
        spec.cpts = {tensor_from({{0.2, 0.3, 0.5}}),
                     tensor_from({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})};
        Rng rng(14);
        IntMatrix X = sample_discrete_bn(spec, 200, rng);
        for (int i = 0; i < 200; ++i) CHECK(X(i, 0) == X(i, 1));
    }
    SUBCASE("malformed CPT rows are rejected") {
        DiscreteBnSpec spec;
        spec.dag = make_dag(1, {});
        spec.cardinalities = {2};
        spec.cpts = {tensor_from({{0.7, 0.4}})};
        Rng rng(15);
        CHECK_THROWS_AS(sample_discrete_bn(spec, 5, rng), DataError);
    }
    SUBCASE("random networks validate and sample deterministically") {
        Rng rng(16);
        DiscreteBnSpec spec = random_discrete_bn(8, 3.0, 3, rng);
        Rng s1 = rng.split(1), s2 = rng.split(1);
        IntMatrix X1 = sample_discrete_bn(spec, 64, s1);
        IntMatrix X2 = sample_discrete_bn(spec, 64, s2);
        CHECK((X1 - X2).cwiseAbs().maxCoeff() == 0);
    }
}
