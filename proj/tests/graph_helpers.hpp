// Shared test helpers: random connected graphs and brute-force tree oracles.
#ifndef DDAM_TESTS_GRAPH_HELPERS_HPP
#define DDAM_TESTS_GRAPH_HELPERS_HPP

#include <algorithm>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "ddam/rng.hpp"
#include "ddam/routing.hpp"
#include "ddam/topology.hpp"

namespace ddam_tests {

using ddam::Edge;
using ddam::PhysicalGraph;

// Random connected graph: a random spanning tree plus Bernoulli extras.
inline PhysicalGraph random_connected_graph(int n, double extra_p, std::uint64_t seed,
                                            int max_edges = 64, int max_delay = 1) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        ddam::Rng rng = ddam::Rng::keyed(seed, {0x7267, attempt});
        std::vector<Edge> edges;
        for (int v = 1; v < n; ++v) {
            const int u = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(v));
            edges.push_back({u, v});
        }
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (rng.uniform() < extra_p) edges.push_back({a, b});
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        if (static_cast<int>(edges.size()) > max_edges) continue;
        std::vector<int> delays;
        for (size_t i = 0; i < edges.size(); ++i)
            delays.push_back(1 + static_cast<int>(rng.next_u64() %
                                                  static_cast<std::uint64_t>(max_delay)));
        return ddam::make_graph(n, edges, delays);
    }
}

struct BruteForceTree {
    long dist = std::numeric_limits<long>::max();         // sum of root->terminal path delays
    long edge_weight = std::numeric_limits<long>::max();  // total edge delay (Steiner objective)
};

// Enumerate every edge subset that forms a tree covering {root} + terminals;
// track both objectives. Exponential in |E|; callers keep |E| small.
inline BruteForceTree brute_force_trees(const PhysicalGraph& g, int root,
                                        const std::vector<int>& terminals) {
    const int E = static_cast<int>(g.edges.size());
    BruteForceTree best;
    std::vector<int> uf(static_cast<size_t>(g.n_nodes));
    for (std::uint64_t mask = 0; mask < (1ull << E); ++mask) {
        // acyclicity via union-find
        for (int i = 0; i < g.n_nodes; ++i) uf[static_cast<size_t>(i)] = i;
        auto find = [&](int x) {
            while (uf[static_cast<size_t>(x)] != x) x = uf[static_cast<size_t>(x)] = uf[static_cast<size_t>(uf[static_cast<size_t>(x)])];
            return x;
        };
        bool acyclic = true;
        long weight = 0;
        for (int e = 0; e < E && acyclic; ++e) {
            if (!(mask >> e & 1)) continue;
            auto [a, b] = g.edges[static_cast<size_t>(e)];
            const int ra = find(a), rb = find(b);
            if (ra == rb)
                acyclic = false;
            else {
                uf[static_cast<size_t>(ra)] = rb;
                weight += g.edge_delay[static_cast<size_t>(e)];
            }
        }
        if (!acyclic) continue;
        bool covered = true;
        const int rroot = find(root);
        for (int t : terminals)
            if (find(t) != rroot) {
                covered = false;
                break;
            }
        if (!covered) continue;
        // path delays inside the subset tree via BFS from root
        std::vector<long> dist(static_cast<size_t>(g.n_nodes), -1);
        std::queue<int> q;
        q.push(root);
        dist[static_cast<size_t>(root)] = 0;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (auto [v, e] : g.adj[static_cast<size_t>(u)]) {
                if (!(mask >> e & 1)) continue;
                if (dist[static_cast<size_t>(v)] >= 0) continue;
                dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + g.edge_delay[static_cast<size_t>(e)];
                q.push(v);
            }
        }
        long d = 0;
        for (int t : terminals) d += dist[static_cast<size_t>(t)];
        best.dist = std::min(best.dist, d);
        best.edge_weight = std::min(best.edge_weight, weight);
    }
    return best;
}

}  // namespace ddam_tests

#endif
