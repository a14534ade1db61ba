// SPDX-License-Identifier: Apache-2.0
//
// Adjacency-matrix utilities: the acyclicity function h(A), edge
// thresholding, DAG verification and the structural Hamming distance.

#pragma once

#include "dagwgan/expr.hpp"
#include "dagwgan/tensor.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace dagwgan {

using Edge = std::pair<int, int>;
using EdgeSet = std::vector<Edge>;

/// Directed acyclic graph over m nodes. Use make_dag to get validation.
struct BinaryDag {
    int m = 0;
    EdgeSet edges;
};

struct AcyclicityConfig {
    double alpha = 1.0;
    /// Default alpha = 1/m keeps (I + alpha A o A)^m bounded for large m.
    static AcyclicityConfig for_nodes(int m) { return {1.0 / static_cast<double>(m)}; }
};

/// h(A) = tr[(I + alpha A o A)^m] - m. Nonnegative; zero exactly when the
/// nonzero pattern of A is acyclic. Throws on overflow to non-finite with a
/// hint to lower alpha.
double acyclicity_h(const Tensor& A, const AcyclicityConfig& cfg);

/// Same function as an expression over an m x m variable, for use inside
/// training objectives.
ad::Expr acyclicity_expr(const ad::Expr& A, double alpha);

/// Edges (i, j) with |A[i][j]| > tau and i != j. The result may be cyclic.
EdgeSet threshold_graph(const Tensor& A, double tau);

/// Kahn's algorithm. Throws DataError on out-of-range node indices.
bool is_dag(const EdgeSet& edges, int m);

/// Topological order if one exists.
std::optional<std::vector<int>> topological_order(const EdgeSet& edges, int m);

/// Structural Hamming distance. Per unordered pair: 1 if exactly one graph
/// links the pair, 1 if both do with different orientations (a reversal
/// costs 1). Symmetric.
int shd(const EdgeSet& g1, const EdgeSet& g2, int m);

/// Validates: indices in range, no self-loops, no duplicates, acyclic.
BinaryDag make_dag(int m, EdgeSet edges);

} // namespace dagwgan
