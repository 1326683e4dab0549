#ifndef DDAM_ROUTING_HPP
#define DDAM_ROUTING_HPP

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "ddam/common.hpp"
#include "ddam/topology.hpp"

namespace ddam {

// Rooted routing tree on the physical graph: parameter broadcasts travel
// root -> target, gradient replies travel back, so round_trip = 2 * one-way.
struct RoutingTree {
    AgentId root = 0;
    std::vector<Edge> tree_edges;      // sorted lexicographically
    std::vector<int> parent;           // per node; -1 at root and off-tree nodes
    std::vector<int> parent_edge;      // graph edge index into the node, -1 likewise
    std::vector<long> hop_delay;       // one-way delay root->node, -1 if off-tree

    bool contains(AgentId m) const {
        return m == root || parent[static_cast<size_t>(m)] >= 0;
    }
    long one_way(AgentId m) const {
        if (!contains(m)) throw TopologyError("tree: node " + std::to_string(m) + " not spanned");
        return hop_delay[static_cast<size_t>(m)];
    }
    long round_trip(AgentId m) const { return 2 * one_way(m); }

    // Edge sequence root -> m.
    std::vector<Edge> path_to(AgentId m) const {
        std::vector<Edge> path;
        int v = m;
        while (v != root) {
            const int p = parent[static_cast<size_t>(v)];
            if (p < 0) throw TopologyError("tree: broken parent chain");
            path.push_back({std::min(p, v), std::max(p, v)});
            v = p;
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    std::vector<int> path_edges(AgentId m) const {
        std::vector<int> es;
        int v = m;
        while (v != root) {
            es.push_back(parent_edge[static_cast<size_t>(v)]);
            v = parent[static_cast<size_t>(v)];
        }
        std::reverse(es.begin(), es.end());
        return es;
    }
};

namespace detail {

// Assemble a RoutingTree from a parent forest restricted to nodes actually on
// root->terminal paths; dangling branches are dropped.
inline RoutingTree build_tree(const PhysicalGraph& g, AgentId root,
                              const std::vector<int>& parent, const std::vector<int>& parent_edge,
                              const std::vector<AgentId>& terminals) {
    const size_t n = static_cast<size_t>(g.n_nodes);
    std::vector<char> keep(n, 0);
    keep[static_cast<size_t>(root)] = 1;
    for (AgentId t : terminals) {
        int v = t;
        while (v != root) {
            if (keep[static_cast<size_t>(v)]) break;
            keep[static_cast<size_t>(v)] = 1;
            v = parent[static_cast<size_t>(v)];
            if (v < 0) throw TopologyError("tree: terminal " + std::to_string(t) + " unreachable");
        }
    }
    RoutingTree tree;
    tree.root = root;
    tree.parent.assign(n, -1);
    tree.parent_edge.assign(n, -1);
    tree.hop_delay.assign(n, -1);
    tree.hop_delay[static_cast<size_t>(root)] = 0;
    for (int v = 0; v < g.n_nodes; ++v) {
        if (!keep[static_cast<size_t>(v)] || v == root) continue;
        tree.parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(v)];
        tree.parent_edge[static_cast<size_t>(v)] = parent_edge[static_cast<size_t>(v)];
        const int pe = parent_edge[static_cast<size_t>(v)];
        auto [a, b] = g.edges[static_cast<size_t>(pe)];
        tree.tree_edges.push_back({a, b});
    }
    std::sort(tree.tree_edges.begin(), tree.tree_edges.end());
    // Delays by walking up; memoized via repeated passes (trees are tiny).
    bool progress = true;
    while (progress) {
        progress = false;
        for (int v = 0; v < g.n_nodes; ++v) {
            if (tree.hop_delay[static_cast<size_t>(v)] >= 0) continue;
            const int p = tree.parent[static_cast<size_t>(v)];
            if (p < 0) continue;
            if (tree.hop_delay[static_cast<size_t>(p)] >= 0) {
                tree.hop_delay[static_cast<size_t>(v)] =
                    tree.hop_delay[static_cast<size_t>(p)] +
                    g.edge_delay[static_cast<size_t>(tree.parent_edge[static_cast<size_t>(v)])];
                progress = true;
            }
        }
    }
    return tree;
}

}  // namespace detail

// Steiner-tree baseline: classical metric-closure MST 2-approximation of the
// minimum total edge delay tree spanning {root} + terminals. Deterministic:
// ties broken lexicographically throughout.
inline RoutingTree steiner_tree(const PhysicalGraph& g, AgentId root,
                                const std::vector<AgentId>& terminals_in) {
    if (root < 0 || root >= g.n_nodes) throw TopologyError("steiner: root out of range");
    std::vector<AgentId> terminals;
    for (AgentId t : terminals_in) {
        if (t < 0 || t >= g.n_nodes) throw TopologyError("steiner: terminal out of range");
        if (t != root) terminals.push_back(t);
    }
    std::sort(terminals.begin(), terminals.end());
    terminals.erase(std::unique(terminals.begin(), terminals.end()), terminals.end());
    if (terminals.empty()) {
        RoutingTree tree;
        tree.root = root;
        tree.parent.assign(static_cast<size_t>(g.n_nodes), -1);
        tree.parent_edge.assign(static_cast<size_t>(g.n_nodes), -1);
        tree.hop_delay.assign(static_cast<size_t>(g.n_nodes), -1);
        tree.hop_delay[static_cast<size_t>(root)] = 0;
        return tree;
    }

    std::vector<AgentId> key_nodes = terminals;
    key_nodes.insert(key_nodes.begin(), root);
    std::vector<ShortestPaths> sps;
    sps.reserve(key_nodes.size());
    for (AgentId s : key_nodes) {
        sps.push_back(shortest_paths(g, s));
        for (AgentId t : terminals)
            if (sps.back().dist[static_cast<size_t>(t)] < 0)
                throw TopologyError("steiner: terminal " + std::to_string(t) + " unreachable");
    }

    // Prim's MST on the metric closure of the key nodes.
    const size_t K = key_nodes.size();
    std::vector<char> in_mst(K, 0);
    std::vector<long> best(K, std::numeric_limits<long>::max());
    std::vector<int> best_from(K, -1);
    in_mst[0] = 1;
    for (size_t j = 1; j < K; ++j) {
        best[j] = sps[0].dist[static_cast<size_t>(key_nodes[j])];
        best_from[j] = 0;
    }
    std::vector<std::pair<int, int>> mst_edges;  // (key index from, key index to)
    for (size_t added = 1; added < K; ++added) {
        int pick = -1;
        for (size_t j = 0; j < K; ++j) {
            if (in_mst[j]) continue;
            if (pick < 0 || best[j] < best[static_cast<size_t>(pick)]) pick = static_cast<int>(j);
        }
        in_mst[static_cast<size_t>(pick)] = 1;
        mst_edges.push_back({best_from[static_cast<size_t>(pick)], pick});
        for (size_t j = 0; j < K; ++j) {
            if (in_mst[j]) continue;
            const long d =
                sps[static_cast<size_t>(pick)].dist[static_cast<size_t>(key_nodes[j])];
            if (d < best[j]) {
                best[j] = d;
                best_from[j] = pick;
            }
        }
    }

    // Expand MST edges into canonical shortest paths; union the graph edges.
    std::set<int> union_edges;
    for (auto [ki, kj] : mst_edges) {
        const auto& sp = sps[static_cast<size_t>(ki)];
        int v = key_nodes[static_cast<size_t>(kj)];
        while (v != key_nodes[static_cast<size_t>(ki)]) {
            union_edges.insert(sp.parent_edge[static_cast<size_t>(v)]);
            v = sp.parent[static_cast<size_t>(v)];
        }
    }

    // Kruskal MST of the union subgraph (it may contain cycles), then root it.
    std::vector<int> uf(static_cast<size_t>(g.n_nodes));
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
        while (uf[static_cast<size_t>(x)] != x) {
            uf[static_cast<size_t>(x)] = uf[static_cast<size_t>(uf[static_cast<size_t>(x)])];
            x = uf[static_cast<size_t>(x)];
        }
        return x;
    };
    std::vector<std::pair<std::pair<long, int>, Edge>> cand;  // ((delay, edge idx), edge)
    for (int e : union_edges)
        cand.push_back({{g.edge_delay[static_cast<size_t>(e)], e}, g.edges[static_cast<size_t>(e)]});
    std::sort(cand.begin(), cand.end());
    std::vector<std::vector<std::pair<int, int>>> tadj(static_cast<size_t>(g.n_nodes));
    for (auto& [key, e] : cand) {
        auto [a, b] = e;
        const int ra = find(a), rb = find(b);
        if (ra == rb) continue;
        uf[static_cast<size_t>(ra)] = rb;
        tadj[static_cast<size_t>(a)].push_back({b, key.second});
        tadj[static_cast<size_t>(b)].push_back({a, key.second});
    }
    // BFS from root over the spanning forest to get parents.
    std::vector<int> parent(static_cast<size_t>(g.n_nodes), -1);
    std::vector<int> parent_edge(static_cast<size_t>(g.n_nodes), -1);
    std::vector<char> seen(static_cast<size_t>(g.n_nodes), 0);
    std::queue<int> q;
    q.push(root);
    seen[static_cast<size_t>(root)] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (auto [v, e] : tadj[static_cast<size_t>(u)]) {
            if (seen[static_cast<size_t>(v)]) continue;
            seen[static_cast<size_t>(v)] = 1;
            parent[static_cast<size_t>(v)] = u;
            parent_edge[static_cast<size_t>(v)] = e;
            q.push(v);
        }
    }
    return detail::build_tree(g, root, parent, parent_edge, terminals);
}

// Exact sum-delay tree: minimizes Dist = sum over terminals of the in-tree
// root->terminal path delay. Any tree path is at least the graph shortest
// path, so Dist >= sum of shortest-path distances for every feasible tree;
// the canonical shortest-path tree attains that lower bound for all
// terminals simultaneously and is therefore optimal. Pruned to the union of
// root->terminal paths, ties broken by smallest parent index.
inline RoutingTree sumdelay_tree(const PhysicalGraph& g, AgentId root,
                                 const std::vector<AgentId>& terminals_in) {
    if (root < 0 || root >= g.n_nodes) throw TopologyError("sumdelay: root out of range");
    std::vector<AgentId> terminals;
    for (AgentId t : terminals_in) {
        if (t < 0 || t >= g.n_nodes) throw TopologyError("sumdelay: terminal out of range");
        if (t != root) terminals.push_back(t);
    }
    std::sort(terminals.begin(), terminals.end());
    terminals.erase(std::unique(terminals.begin(), terminals.end()), terminals.end());
    auto sp = shortest_paths(g, root);
    for (AgentId t : terminals)
        if (sp.dist[static_cast<size_t>(t)] < 0)
            throw TopologyError("sumdelay: terminal " + std::to_string(t) + " unreachable");
    return detail::build_tree(g, root, sp.parent, sp.parent_edge, terminals);
}

// One-way path-delay sum over the given terminals (the tree-design objective).
inline long tree_dist(const RoutingTree& tree, const std::vector<AgentId>& terminals) {
    long dist = 0;
    for (AgentId t : terminals)
        if (t != tree.root) dist += tree.one_way(t);
    return dist;
}

// Delay statistics over a target set; tau(root, root) = 0 participates when
// the root targets itself.
inline DelaySummary delay_summary(const RoutingTree& tree, const std::vector<AgentId>& targets) {
    DelaySummary s;
    if (targets.empty()) return s;
    bool first = true;
    for (AgentId m : targets) {
        const long tau = (m == tree.root) ? 0 : tree.round_trip(m);
        s.tau_sum += tau;
        if (first) {
            s.tau_min = s.tau_max = tau;
            first = false;
        } else {
            s.tau_min = std::min(s.tau_min, tau);
            s.tau_max = std::max(s.tau_max, tau);
        }
    }
    s.delta_tau = s.tau_max - s.tau_min;
    return s;
}

// Maximum per-link load: each root->target tree path loads its edges once,
// and the factor 2 accounts for the parameter leg and the gradient leg.
inline long link_capacity(const std::vector<RoutingTree>& trees, const LogicalWeights& W) {
    std::vector<long> load;
    long max_load = 0;
    for (int n = 0; n < W.size(); ++n) {
        const auto& tree = trees[static_cast<size_t>(n)];
        for (AgentId m : W.support[static_cast<size_t>(n)]) {
            if (m == n) continue;
            for (int e : tree.path_edges(m)) {
                if (load.size() <= static_cast<size_t>(e)) load.resize(static_cast<size_t>(e) + 1, 0);
                max_load = std::max(max_load, ++load[static_cast<size_t>(e)]);
            }
        }
    }
    return 2 * max_load;
}

}  // namespace ddam

#endif
