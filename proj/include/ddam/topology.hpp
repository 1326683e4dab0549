#ifndef DDAM_TOPOLOGY_HPP
#define DDAM_TOPOLOGY_HPP

#include <algorithm>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "ddam/common.hpp"
#include "ddam/rng.hpp"

namespace ddam {

using Edge = std::pair<int, int>;  // normalized: first < second

struct PhysicalGraph {
    int n_nodes = 0;
    std::vector<Edge> edges;        // sorted lexicographically, unique
    std::vector<int> edge_delay;    // per edge, positive integer steps per hop
    std::vector<std::vector<std::pair<int, int>>> adj;  // node -> (neighbor, edge index)

    int degree(int v) const { return static_cast<int>(adj[static_cast<size_t>(v)].size()); }

    int edge_index(int a, int b) const {
        if (a > b) std::swap(a, b);
        auto it = std::lower_bound(edges.begin(), edges.end(), Edge{a, b});
        if (it == edges.end() || *it != Edge{a, b}) return -1;
        return static_cast<int>(it - edges.begin());
    }
};

namespace detail {
inline bool graph_connected(const PhysicalGraph& g) {
    if (g.n_nodes == 0) return false;
    std::vector<char> seen(static_cast<size_t>(g.n_nodes), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (auto [v, e] : g.adj[static_cast<size_t>(u)]) {
            (void)e;
            if (!seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = 1;
                ++count;
                q.push(v);
            }
        }
    }
    return count == g.n_nodes;
}
}  // namespace detail

// Edges may carry explicit delays; a delay of 1 step per hop is the default.
inline PhysicalGraph make_graph(int n_nodes, const std::vector<Edge>& edges,
                                const std::vector<int>& delays = {}) {
    if (n_nodes <= 0) throw TopologyError("graph: need at least one node");
    if (!delays.empty() && delays.size() != edges.size())
        throw TopologyError("graph: delay list length != edge list length");
    PhysicalGraph g;
    g.n_nodes = n_nodes;
    std::vector<std::pair<Edge, int>> norm;
    norm.reserve(edges.size());
    for (size_t i = 0; i < edges.size(); ++i) {
        auto [a, b] = edges[i];
        if (a == b) throw TopologyError("graph: self-loop at node " + std::to_string(a));
        if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes)
            throw TopologyError("graph: edge endpoint out of range");
        if (a > b) std::swap(a, b);
        int d = delays.empty() ? 1 : delays[i];
        if (d <= 0) throw TopologyError("graph: edge delay must be a positive integer");
        norm.push_back({{a, b}, d});
    }
    std::sort(norm.begin(), norm.end());
    for (size_t i = 1; i < norm.size(); ++i)
        if (norm[i].first == norm[i - 1].first)
            throw TopologyError("graph: duplicate edge (" + std::to_string(norm[i].first.first) +
                                "," + std::to_string(norm[i].first.second) + ")");
    g.edges.reserve(norm.size());
    g.edge_delay.reserve(norm.size());
    for (auto& [e, d] : norm) {
        g.edges.push_back(e);
        g.edge_delay.push_back(d);
    }
    g.adj.assign(static_cast<size_t>(n_nodes), {});
    for (size_t i = 0; i < g.edges.size(); ++i) {
        auto [a, b] = g.edges[i];
        g.adj[static_cast<size_t>(a)].push_back({b, static_cast<int>(i)});
        g.adj[static_cast<size_t>(b)].push_back({a, static_cast<int>(i)});
    }
    if (!detail::graph_connected(g)) throw TopologyError("graph: not connected");
    return g;
}

// Deterministic Erdos-Renyi draw, retried with an attempt counter mixed into
// the seed until connected.
inline PhysicalGraph erdos_renyi(int n_nodes, double p, std::uint64_t seed) {
    if (p <= 0.0 || p > 1.0) throw ConfigError("erdos_renyi: p must be in (0,1]");
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        Rng rng = Rng::keyed(seed, {fnv1a64("erdos_renyi"), attempt});
        std::vector<Edge> edges;
        for (int a = 0; a < n_nodes; ++a)
            for (int b = a + 1; b < n_nodes; ++b)
                if (rng.uniform() < p) edges.push_back({a, b});
        try {
            return make_graph(n_nodes, edges);
        } catch (const TopologyError&) {
            continue;
        }
    }
    throw TopologyError("erdos_renyi: no connected draw in 1000 attempts");
}

// Single-source shortest path delays (Dijkstra over positive integer delays)
// with canonical parents: among equal-cost predecessors the smallest node
// index wins, so downstream tree construction is deterministic.
struct ShortestPaths {
    std::vector<long> dist;
    std::vector<int> parent;       // -1 at source / unreachable
    std::vector<int> parent_edge;  // edge index used to enter the node
};

inline ShortestPaths shortest_paths(const PhysicalGraph& g, int source) {
    const size_t n = static_cast<size_t>(g.n_nodes);
    ShortestPaths sp;
    sp.dist.assign(n, -1);
    sp.parent.assign(n, -1);
    sp.parent_edge.assign(n, -1);
    using Item = std::pair<long, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    sp.dist[static_cast<size_t>(source)] = 0;
    pq.push({0, source});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d != sp.dist[static_cast<size_t>(u)]) continue;
        for (auto [v, e] : g.adj[static_cast<size_t>(u)]) {
            const long nd = d + g.edge_delay[static_cast<size_t>(e)];
            long& dv = sp.dist[static_cast<size_t>(v)];
            if (dv < 0 || nd < dv) {
                dv = nd;
                pq.push({nd, v});
            }
        }
    }
    // Canonical parents from settled distances.
    for (int v = 0; v < g.n_nodes; ++v) {
        if (v == source || sp.dist[static_cast<size_t>(v)] < 0) continue;
        for (auto [u, e] : g.adj[static_cast<size_t>(v)]) {
            if (sp.dist[static_cast<size_t>(u)] < 0) continue;
            if (sp.dist[static_cast<size_t>(u)] + g.edge_delay[static_cast<size_t>(e)] ==
                sp.dist[static_cast<size_t>(v)]) {
                if (sp.parent[static_cast<size_t>(v)] < 0 || u < sp.parent[static_cast<size_t>(v)]) {
                    sp.parent[static_cast<size_t>(v)] = u;
                    sp.parent_edge[static_cast<size_t>(v)] = e;
                }
            }
        }
    }
    return sp;
}

inline std::vector<std::vector<long>> all_pairs_hops(const PhysicalGraph& g) {
    std::vector<std::vector<long>> d;
    d.reserve(static_cast<size_t>(g.n_nodes));
    for (int s = 0; s < g.n_nodes; ++s) {
        auto sp = shortest_paths(g, s);
        for (long x : sp.dist)
            if (x < 0) throw TopologyError("all_pairs_hops: graph not connected");
        d.push_back(std::move(sp.dist));
    }
    return d;
}

// Row-stochastic logical interest matrix with derived support sets.
struct LogicalWeights {
    Mat W;
    std::vector<std::vector<AgentId>> support;  // W_n = { m : w_{n,m} > 0 }, ascending

    int size() const { return static_cast<int>(W.rows()); }
};

inline LogicalWeights validate_weights(const Mat& W) {
    if (W.rows() != W.cols()) throw ConfigError("weights: matrix must be square");
    if (W.rows() == 0) throw ConfigError("weights: empty matrix");
    LogicalWeights lw;
    lw.W = W;
    const double tol = 1e-9;
    for (int n = 0; n < W.rows(); ++n) {
        double sum = 0.0;
        for (int m = 0; m < W.cols(); ++m) {
            const double w = W(n, m);
            if (!std::isfinite(w) || w < 0.0)
                throw ConfigError("weights: negative or non-finite entry at row " +
                                  std::to_string(n));
            if (w > 1.0 + tol)
                throw ConfigError("weights: entry > 1 at row " + std::to_string(n));
            sum += w;
        }
        if (std::abs(sum - 1.0) > tol)
            throw ConfigError("weights: row " + std::to_string(n) + " sums to " +
                              format_double(sum) + ", not 1");
        lw.W.row(n) /= sum;  // absorb roundoff within tolerance
    }
    lw.support.resize(static_cast<size_t>(W.rows()));
    for (int n = 0; n < W.rows(); ++n)
        for (int m = 0; m < W.cols(); ++m)
            if (lw.W(n, m) > 0.0) lw.support[static_cast<size_t>(n)].push_back(m);
    return lw;
}

inline LogicalWeights identity_weights(int n) {
    return validate_weights(Mat::Identity(n, n));
}

inline LogicalWeights uniform_weights(int n) {
    return validate_weights(Mat::Constant(n, n, 1.0 / n));
}

// Zero out sub-threshold off-diagonal interest and renormalize rows. The
// diagonal always survives. Used to realize sparse logical subsets on top of
// Dirichlet draws, whose raw support is almost surely dense.
inline LogicalWeights sparsify_weights(const LogicalWeights& lw, double threshold) {
    if (threshold <= 0.0) return lw;
    Mat W = lw.W;
    for (int n = 0; n < W.rows(); ++n) {
        for (int m = 0; m < W.cols(); ++m)
            if (m != n && W(n, m) < threshold) W(n, m) = 0.0;
        const double sum = W.row(n).sum();
        if (sum <= 0.0) throw ConfigError("sparsify_weights: row " + std::to_string(n) + " emptied");
        W.row(n) /= sum;
    }
    return validate_weights(W);
}

// Metropolis-Hastings mixing matrix on the graph: symmetric, doubly
// stochastic, supported on edges plus the diagonal.
inline Mat metropolis_weights(const PhysicalGraph& g) {
    Mat A = Mat::Zero(g.n_nodes, g.n_nodes);
    for (size_t i = 0; i < g.edges.size(); ++i) {
        auto [a, b] = g.edges[i];
        const double w = 1.0 / (1.0 + std::max(g.degree(a), g.degree(b)));
        A(a, b) = w;
        A(b, a) = w;
    }
    for (int n = 0; n < g.n_nodes; ++n) A(n, n) = 1.0 - A.row(n).sum();
    return A;
}

// Contraction factor of the consensus matrix: second-largest singular value,
// i.e. ||A - 11^T/N||_2, via power iteration on M^T M.
inline double spectral_contraction(const Mat& A) {
    const int n = static_cast<int>(A.rows());
    const Mat M = A - Mat::Constant(n, n, 1.0 / n);
    Vec v = Vec::Ones(n);
    v(0) = 2.0;  // fixed deterministic start, not orthogonal to the top space
    v.normalize();
    double sigma2 = 0.0;
    for (int it = 0; it < 500; ++it) {
        Vec w = M.transpose() * (M * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        sigma2 = nw;
    }
    return std::sqrt(sigma2);
}

// Per-agent delay statistics entering the regret constants; tau(n,n) = 0 is
// included whenever the agent itself is a target.
struct DelaySummary {
    long tau_min = 0;
    long tau_max = 0;
    long delta_tau = 0;
    long tau_sum = 0;
};

}  // namespace ddam

#endif
