#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ddam/routing.hpp"
#include "graph_helpers.hpp"

using namespace ddam;
using ddam_tests::brute_force_trees;
using ddam_tests::random_connected_graph;

namespace {

long steiner_edge_weight(const PhysicalGraph& g, const RoutingTree& t) {
    long w = 0;
    for (const Edge& e : t.tree_edges) w += g.edge_delay[static_cast<size_t>(g.edge_index(e.first, e.second))];
    return w;
}

void check_tree_invariants(const PhysicalGraph& g, const RoutingTree& t,
                           const std::vector<AgentId>& terminals) {
    // edge count = touched nodes - 1
    std::set<int> touched{t.root};
    for (const Edge& e : t.tree_edges) {
        touched.insert(e.first);
        touched.insert(e.second);
    }
    REQUIRE(t.tree_edges.size() + 1 == touched.size());
    for (AgentId m : terminals) {
        REQUIRE(t.contains(m));
        REQUIRE(t.round_trip(m) == 2 * t.one_way(m));
        // stored delay equals summed edge delays along the stored path
        long sum = 0;
        for (const Edge& e : t.path_to(m)) sum += g.edge_delay[static_cast<size_t>(g.edge_index(e.first, e.second))];
        REQUIRE(sum == t.one_way(m));
        // path edges all belong to the tree
        for (const Edge& e : t.path_to(m))
            REQUIRE(std::find(t.tree_edges.begin(), t.tree_edges.end(), e) != t.tree_edges.end());
    }
}

}  // namespace

TEST_CASE("steiner_tree basics") {
    SECTION("star graph with neighbor terminals returns the star edges") {
        const auto g = make_graph(4, {{0, 1}, {0, 2}, {0, 3}});
        const auto t = steiner_tree(g, 0, {1, 2, 3});
        REQUIRE(t.tree_edges == std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}});
    }
    SECTION("path graph end to end returns the whole path") {
        const auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
        const auto t = steiner_tree(g, 0, {3});
        REQUIRE(t.tree_edges == std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}});
        REQUIRE(t.one_way(3) == 3);
    }
    SECTION("no remote terminals yields an empty tree") {
        const auto g = make_graph(3, {{0, 1}, {1, 2}});
        const auto t = steiner_tree(g, 1, {1});
        REQUIRE(t.tree_edges.empty());
        REQUIRE(t.one_way(1) == 0);
    }
    SECTION("within 2x of the optimal Steiner weight on a random graph") {
        const auto g = random_connected_graph(8, 0.25, 11, 16, 2);
        const std::vector<AgentId> terminals{2, 5, 7};
        const auto t = steiner_tree(g, 0, terminals);
        const auto best = brute_force_trees(g, 0, terminals);
        REQUIRE(steiner_edge_weight(g, t) <= 2 * best.edge_weight);
        check_tree_invariants(g, t, terminals);
    }
}

TEST_CASE("sumdelay_tree exactness") {
    SECTION("star graph from the center") {
        const auto g = make_graph(4, {{0, 1}, {0, 2}, {0, 3}});
        const auto t = sumdelay_tree(g, 0, {1, 2, 3});
        REQUIRE(t.tree_edges == std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}});
        REQUIRE(tree_dist(t, {1, 2, 3}) == 3);
    }
    SECTION("tree-shaped graph has no routing freedom") {
        // 0 with children 1, 2; 3 hangs off 1
        const auto g = make_graph(4, {{0, 1}, {0, 2}, {1, 3}});
        const auto t = sumdelay_tree(g, 0, {2, 3});
        REQUIRE(t.tree_edges == std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}});
        REQUIRE(tree_dist(t, {2, 3}) == 1 + 2);
    }
    SECTION("matches brute-force enumeration on a random graph") {
        const auto g = random_connected_graph(8, 0.3, 5, 16, 2);
        const std::vector<AgentId> terminals{1, 4, 6};
        const auto t = sumdelay_tree(g, 0, terminals);
        const auto best = brute_force_trees(g, 0, terminals);
        REQUIRE(tree_dist(t, terminals) == best.dist);
        check_tree_invariants(g, t, terminals);
    }
    SECTION("unreachable terminal rejected") {
        const auto g = make_graph(3, {{0, 1}, {1, 2}});
        REQUIRE_THROWS_AS(sumdelay_tree(g, 0, {5}), TopologyError);
    }
}

TEST_CASE("tree invariants and objective dominance on random instances") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const int n = 5 + static_cast<int>(seed % 6);  // 5..10
        const auto g = random_connected_graph(n, 0.3, 1000 + seed, 64, 3);
        Rng rng = Rng::keyed(seed, {77});
        std::vector<AgentId> terminals;
        for (int v = 0; v < n; ++v)
            if (v != 0 && rng.uniform() < 0.4) terminals.push_back(v);
        if (terminals.empty()) terminals.push_back(n - 1);
        const auto ts = steiner_tree(g, 0, terminals);
        const auto td = sumdelay_tree(g, 0, terminals);
        check_tree_invariants(g, ts, terminals);
        check_tree_invariants(g, td, terminals);
        // the sum-delay optimizer targets path sums directly
        REQUIRE(tree_dist(td, terminals) <= tree_dist(ts, terminals));
        ++checked;
    }
    REQUIRE(checked == 50);
}

TEST_CASE("sumdelay_tree is deterministic") {
    const auto g = random_connected_graph(9, 0.35, 2, 64, 2);
    const auto t1 = sumdelay_tree(g, 3, {0, 5, 8});
    const auto t2 = sumdelay_tree(g, 3, {0, 5, 8});
    REQUIRE(t1.tree_edges == t2.tree_edges);
    REQUIRE(t1.parent == t2.parent);
}
