// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/graph_tools.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace dagwgan {

double acyclicity_h(const Tensor& A, const AcyclicityConfig& cfg) {
    if (A.rows() != A.cols()) throw ShapeError("acyclicity_h: A must be square");
    if (!(cfg.alpha > 0.0)) throw Error("acyclicity_h: alpha must be positive");
    const Eigen::Index m = A.rows();
    Tensor base = Tensor::Identity(m, m) + cfg.alpha * A.cwiseProduct(A);
    Tensor power = Tensor::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i) power = power * base;
    double h = power.trace() - static_cast<double>(m);
    if (!std::isfinite(h))
        throw EvalError("acyclicity_h overflowed to non-finite; lower alpha "
                        "(currently " + std::to_string(cfg.alpha) + ")");
    return h;
}

ad::Expr acyclicity_expr(const ad::Expr& A, double alpha) {
    using namespace ad;
    const Eigen::Index m = A.rows();
    Expr base = add(identity_const(m), scalar_mul(hadamard(A, A), alpha));
    return sub(trace(matpow(base, m)), constant_scalar(static_cast<double>(m)));
}

EdgeSet threshold_graph(const Tensor& A, double tau) {
    if (tau < 0.0) throw Error("threshold_graph: tau must be nonnegative");
    EdgeSet edges;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (i != j && std::abs(A(i, j)) > tau)
                edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return edges;
}

namespace {

void check_indices(const EdgeSet& edges, int m, const char* what) {
    for (const auto& [u, v] : edges)
        if (u < 0 || v < 0 || u >= m || v >= m)
            throw DataError(std::string(what) + ": node index out of range (edge " +
                            std::to_string(u) + " -> " + std::to_string(v) + ", m=" +
                            std::to_string(m) + ")");
}

} // namespace

std::optional<std::vector<int>> topological_order(const EdgeSet& edges, int m) {
    check_indices(edges, m, "topological_order");
    std::vector<std::vector<int>> out(m);
    std::vector<int> indeg(m, 0);
    for (const auto& [u, v] : edges) {
        out[u].push_back(v);
        ++indeg[v];
    }
    std::deque<int> ready;
    for (int i = 0; i < m; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    std::vector<int> order;
    order.reserve(m);
    while (!ready.empty()) {
        int u = ready.front();
        ready.pop_front();
        order.push_back(u);
        for (int v : out[u])
            if (--indeg[v] == 0) ready.push_back(v);
    }
    if (static_cast<int>(order.size()) != m) return std::nullopt;
    return order;
}

bool is_dag(const EdgeSet& edges, int m) {
    return topological_order(edges, m).has_value();
}

int shd(const EdgeSet& g1, const EdgeSet& g2, int m) {
    check_indices(g1, m, "shd");
    check_indices(g2, m, "shd");
    // state per unordered pair: 0 none, 1 lo->hi, 2 hi->lo, 3 both
    auto states = [](const EdgeSet& g) {
        std::map<std::pair<int, int>, int> s;
        for (const auto& [u, v] : g) {
            auto key = std::minmax(u, v);
            s[key] |= (u < v) ? 1 : 2;
        }
        return s;
    };
    auto s1 = states(g1);
    auto s2 = states(g2);
    std::set<std::pair<int, int>> pairs;
    for (const auto& [k, _] : s1) pairs.insert(k);
    for (const auto& [k, _] : s2) pairs.insert(k);
    int dist = 0;
    for (const auto& k : pairs) {
        int a = s1.count(k) ? s1[k] : 0;
        int b = s2.count(k) ? s2[k] : 0;
        if (a != b) ++dist;
    }
    return dist;
}

BinaryDag make_dag(int m, EdgeSet edges) {
    check_indices(edges, m, "make_dag");
    std::set<Edge> seen;
    for (const auto& e : edges) {
        if (e.first == e.second)
            throw DataError("make_dag: self-loop at node " + std::to_string(e.first));
        if (!seen.insert(e).second)
            throw DataError("make_dag: duplicate edge " + std::to_string(e.first) + " -> " +
                            std::to_string(e.second));
    }
    if (!is_dag(edges, m)) throw DataError("make_dag: edge set contains a cycle");
    std::sort(edges.begin(), edges.end());
    return BinaryDag{m, std::move(edges)};
}

} // namespace dagwgan
