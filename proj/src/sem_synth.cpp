// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/sem_synth.hpp"

#include <algorithm>
#include <cmath>

namespace dagwgan {

const char* sem_variant_name(SemVariant v) {
    switch (v) {
        case SemVariant::kLinear: return "linear";
        case SemVariant::kNonlinear1: return "nonlinear1";
        case SemVariant::kNonlinear2: return "nonlinear2";
    }
    return "?";
}

SemVariant sem_variant_from(const std::string& name) {
    if (name == "linear") return SemVariant::kLinear;
    if (name == "nonlinear1") return SemVariant::kNonlinear1;
    if (name == "nonlinear2") return SemVariant::kNonlinear2;
    throw DataError("unknown SEM variant '" + name + "'");
}

void SemSpec::validate() const {
    if (m < 1) throw DataError("SemSpec: m must be >= 1");
    if (!(0.0 < weight_low && weight_low < weight_high))
        throw DataError("SemSpec: need 0 < weight_low < weight_high");
    if (!(expected_degree > 0.0 && expected_degree < m))
        throw DataError("SemSpec: expected_degree must be in (0, m)");
    if (!(noise_std > 0.0)) throw DataError("SemSpec: noise_std must be positive");
}

BinaryDag sample_er_dag(int m, double expected_degree, Rng& rng) {
    if (m < 1) throw DataError("sample_er_dag: m must be >= 1");
    EdgeSet edges;
    if (m > 1) {
        double p = std::min(1.0, expected_degree / static_cast<double>(m - 1));
        std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(m));
        std::vector<int> rank(m);
        for (int k = 0; k < m; ++k) rank[perm[k]] = k;
        for (int u = 0; u < m; ++u)
            for (int v = u + 1; v < m; ++v)
                if (rng.bernoulli(p)) {
                    if (rank[u] < rank[v])
                        edges.emplace_back(u, v);
                    else
                        edges.emplace_back(v, u);
                }
    }
    return make_dag(m, std::move(edges));
}

Tensor assign_weights(const BinaryDag& dag, double weight_low, double weight_high, Rng& rng) {
    if (!(0.0 < weight_low && weight_low < weight_high))
        throw DataError("assign_weights: need 0 < weight_low < weight_high");
    Tensor A = Tensor::Zero(dag.m, dag.m);
    for (const auto& [u, v] : dag.edges) {
        double w = rng.uniform(weight_low, weight_high);
        if (rng.bernoulli(0.5)) w = -w;
        A(u, v) = w;
    }
    return A;
}

Tensor sample_sem(const Tensor& A, SemVariant variant, int n, double noise_std, Rng& rng) {
    const int m = static_cast<int>(A.rows());
    if (A.rows() != A.cols()) throw ShapeError("sample_sem: A must be square");
    auto order = topological_order(threshold_graph(A, 0.0), m);
    if (!order) throw DataError("sample_sem: the support of A contains a cycle");

    // incoming edges per node (column j of A)
    std::vector<std::vector<int>> parents(m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            if (i != j && A(i, j) != 0.0) parents[j].push_back(i);

    Tensor X(n, m);
    for (int s = 0; s < n; ++s) {
        Rng stream = rng.split(static_cast<std::uint64_t>(s));
        std::vector<double> z(m);
        for (int j = 0; j < m; ++j) z[j] = stream.normal(0.0, noise_std);
        auto& row = X;
        for (int j : *order) {
            double acc = 0.0;
            switch (variant) {
                case SemVariant::kLinear:
                    for (int i : parents[j]) acc += A(i, j) * row(s, i);
                    break;
                case SemVariant::kNonlinear1:
                    for (int i : parents[j]) acc += A(i, j) * std::cos(row(s, i) + 1.0);
                    break;
                case SemVariant::kNonlinear2: {
                    double lin = 0.0, cos_part = 0.0;
                    for (int i : parents[j]) {
                        lin += A(i, j) * (row(s, i) + 0.5);
                        cos_part += A(i, j) * std::cos(row(s, i) + 0.5);
                    }
                    acc = 2.0 * std::sin(lin) + cos_part;
                    break;
                }
            }
            row(s, j) = acc + z[j];
        }
    }
    ensure_finite(X, "sample_sem output");
    return X;
}

SemDraw simulate_sem(const SemSpec& spec, int n) {
    spec.validate();
    Rng rng(spec.seed);
    Rng g_rng = rng.split(0);
    Rng w_rng = rng.split(1);
    Rng x_rng = rng.split(2);
    SemDraw draw;
    draw.dag = sample_er_dag(spec.m, spec.expected_degree, g_rng);
    draw.weights = assign_weights(draw.dag, spec.weight_low, spec.weight_high, w_rng);
    draw.data = sample_sem(draw.weights, spec.variant, n, spec.noise_std, x_rng);
    return draw;
}

void DiscreteBnSpec::validate() const {
    const int m = dag.m;
    if (static_cast<int>(cardinalities.size()) != m || static_cast<int>(cpts.size()) != m)
        throw DataError("DiscreteBnSpec: per-node sizes do not match node count");
    std::vector<std::vector<int>> parents(m);
    for (const auto& [u, v] : dag.edges) parents[v].push_back(u);
    for (int j = 0; j < m; ++j) {
        std::sort(parents[j].begin(), parents[j].end());
        long rows = 1;
        for (int p : parents[j]) rows *= cardinalities[p];
        if (cpts[j].rows() != rows || cpts[j].cols() != cardinalities[j])
            throw DataError("DiscreteBnSpec: CPT shape mismatch at node " + std::to_string(j));
        for (Eigen::Index r = 0; r < cpts[j].rows(); ++r) {
            double s = cpts[j].row(r).sum();
            if (std::abs(s - 1.0) > 1e-9)
                throw DataError("DiscreteBnSpec: CPT row " + std::to_string(r) + " of node " +
                                std::to_string(j) + " sums to " + std::to_string(s));
            if (cpts[j].row(r).minCoeff() < 0.0)
                throw DataError("DiscreteBnSpec: negative probability at node " +
                                std::to_string(j));
        }
    }
}

DiscreteBnSpec random_discrete_bn(int m, double expected_degree, int cardinality, Rng& rng,
                                  double sharpen) {
    if (cardinality < 2) throw DataError("random_discrete_bn: cardinality must be >= 2");
    DiscreteBnSpec spec;
    Rng g_rng = rng.split(11);
    Rng c_rng = rng.split(12);
    spec.dag = sample_er_dag(m, expected_degree, g_rng);
    spec.cardinalities.assign(m, cardinality);

    std::vector<std::vector<int>> parents(m);
    for (const auto& [u, v] : spec.dag.edges) parents[v].push_back(u);
    spec.cpts.resize(m);
    for (int j = 0; j < m; ++j) {
        std::sort(parents[j].begin(), parents[j].end());
        long rows = 1;
        for (int p : parents[j]) rows *= spec.cardinalities[p];
        Tensor cpt(rows, cardinality);
        for (long r = 0; r < rows; ++r) {
            double total = 0.0;
            for (int c = 0; c < cardinality; ++c) {
                // Dirichlet(1) row via normalized exponentials
                double e = -std::log(1.0 - c_rng.uniform());
                cpt(r, c) = e;
                total += e;
            }
            cpt.row(r) /= total;
            // sharpen toward informative rows
            for (int c = 0; c < cardinality; ++c) cpt(r, c) = std::pow(cpt(r, c), sharpen);
            cpt.row(r) /= cpt.row(r).sum();
        }
        spec.cpts[j] = std::move(cpt);
    }
    spec.validate();
    return spec;
}

IntMatrix sample_discrete_bn(const DiscreteBnSpec& spec, int n, Rng& rng) {
    spec.validate();
    const int m = spec.dag.m;
    auto order = topological_order(spec.dag.edges, m);
    if (!order) throw DataError("sample_discrete_bn: graph is not a DAG");

    std::vector<std::vector<int>> parents(m);
    for (const auto& [u, v] : spec.dag.edges) parents[v].push_back(u);
    for (auto& p : parents) std::sort(p.begin(), p.end());

    IntMatrix X(n, m);
    for (int s = 0; s < n; ++s) {
        Rng stream = rng.split(static_cast<std::uint64_t>(s));
        for (int j : *order) {
            long row = 0;
            for (int p : parents[j]) row = row * spec.cardinalities[p] + X(s, p);
            double u = stream.uniform();
            double acc = 0.0;
            int code = spec.cardinalities[j] - 1;
            for (int c = 0; c < spec.cardinalities[j]; ++c) {
                acc += spec.cpts[j](row, c);
                if (u < acc) {
                    code = c;
                    break;
                }
            }
            X(s, j) = code;
        }
    }
    return X;
}

} // namespace dagwgan
