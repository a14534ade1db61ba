// SPDX-License-Identifier: Apache-2.0
//
// Synthetic benchmark generation: Erdos-Renyi DAGs, weighted structural
// equation models (linear and two non-linear variants) and a small discrete
// Bayesian-network sampler for discrete-mode tests.

#pragma once

#include "dagwgan/graph_tools.hpp"
#include "dagwgan/rng.hpp"
#include "dagwgan/tensor.hpp"

#include <cstdint>
#include <vector>

namespace dagwgan {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class SemVariant { kLinear, kNonlinear1, kNonlinear2 };

const char* sem_variant_name(SemVariant v);
SemVariant sem_variant_from(const std::string& name);

struct SemSpec {
    int m = 10;
    SemVariant variant = SemVariant::kLinear;
    double noise_std = 1.0;
    double weight_low = 0.5;
    double weight_high = 2.0;
    double expected_degree = 3.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Undirected Erdos-Renyi draw with p = expected_degree / (m - 1), oriented
/// low-to-high rank under a uniformly random node permutation. Always a DAG;
/// expected edge count m * expected_degree / 2.
BinaryDag sample_er_dag(int m, double expected_degree, Rng& rng);

/// Edge weights drawn uniformly from +-[weight_low, weight_high];
/// non-edges exactly zero.
Tensor assign_weights(const BinaryDag& dag, double weight_low, double weight_high, Rng& rng);

/// n x m samples in topological order. Per node j (column j of A carries the
/// incoming weights):
///   linear:     x_j = (A^T x)_j + z_j
///   nonlinear1: x_j = (A^T h(x))_j + z_j with h(x) = cos(x + 1)
///   nonlinear2: x_j = 2 sin((A^T (x+0.5))_j) + (A^T cos(x+0.5))_j + z_j
/// z_j ~ Normal(0, noise_std^2). Per-sample RNG streams are split from `rng`,
/// so the result is independent of evaluation order.
Tensor sample_sem(const Tensor& A, SemVariant variant, int n, double noise_std, Rng& rng);

/// Convenience: dag + weights + data from one spec.
struct SemDraw {
    BinaryDag dag;
    Tensor weights;
    Tensor data;
};
SemDraw simulate_sem(const SemSpec& spec, int n);

// ---- discrete ----

/// cpts[j] has one row per joint parent configuration (parents in ascending
/// node order, earlier parent = more significant digit) and card_j columns.
struct DiscreteBnSpec {
    BinaryDag dag;
    std::vector<int> cardinalities;
    std::vector<Tensor> cpts;

    void validate() const; // each row sums to 1 +- 1e-9, row counts match
};

/// Random network: ER degree structure, Dirichlet(1) rows sharpened by
/// raising to `sharpen` and renormalizing.
DiscreteBnSpec random_discrete_bn(int m, double expected_degree, int cardinality, Rng& rng,
                                  double sharpen = 2.0);

/// Ancestral sampling; returns n x m integer codes.
IntMatrix sample_discrete_bn(const DiscreteBnSpec& spec, int n, Rng& rng);

} // namespace dagwgan
