#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mlepi/multiplex.hpp"
#include "mlepi/rng.hpp"

using namespace mlepi;

namespace {

LayerEdgeList layer(std::string name, std::vector<std::pair<NodeId, NodeId>> edges) {
    return LayerEdgeList{std::move(name), std::move(edges)};
}

MultiplexNetwork two_layer_fixture() {
    // layer a: triangle 0-1-2 plus pendant 3; layer b: path 0-3
    std::vector<NodeId> registry = {0, 1, 2, 3};
    return build_multiplex(
        {layer("a", {{0, 1}, {1, 2}, {2, 0}, {2, 3}}), layer("b", {{0, 3}})},
        registry);
}

} // namespace

TEST_CASE("build_multiplex assigns dense indices by sorted external id") {
    // scrambled, non-contiguous external ids
    std::vector<NodeId> registry = {500, 7, 42};
    auto net = build_multiplex({layer("x", {{500, 7}, {42, 500}})}, registry);
    REQUIRE(net.n_nodes() == 3);
    CHECK(net.node_ids == std::vector<NodeId>{7, 42, 500});
    // 7->0, 42->1, 500->2
    CHECK(net.layers[0].has_edge(0, 2));
    CHECK(net.layers[0].has_edge(1, 2));
    CHECK(!net.layers[0].has_edge(0, 1));
    CHECK(net.layers[0].edge_count == 2);
}

TEST_CASE("build_multiplex deduplicates repeated and reversed edges") {
    std::vector<NodeId> registry = {0, 1, 2};
    auto net = build_multiplex(
        {layer("x", {{0, 1}, {1, 0}, {0, 1}, {1, 2}})}, registry);
    CHECK(net.layers[0].edge_count == 2);
    CHECK(net.layers[0].degree(0) == 1);
    CHECK(net.layers[0].degree(1) == 2);
}

TEST_CASE("build_multiplex rejects unknown nodes and self-loops") {
    std::vector<NodeId> registry = {0, 1};
    CHECK_THROWS_WITH_AS(build_multiplex({layer("work", {{0, 9}})}, registry),
                         doctest::Contains("unknown node 9"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(build_multiplex({layer("school", {{1, 1}})}, registry),
                         doctest::Contains("self-loop on node 1"),
                         std::invalid_argument);
}

TEST_CASE("multidegree equals aggregate strength") {
    auto net = two_layer_fixture();
    auto agg = aggregate(net);
    for (NodeIndex i = 0; i < net.n_nodes(); ++i)
        CHECK(static_cast<double>(net.multidegree(i)) == doctest::Approx(agg.strength[i]));
    // node 3 appears in both layers: strength 2, distinct neighbors {0, 2}
    CHECK(agg.strength[3] == doctest::Approx(2.0));
    CHECK(agg.offsets[4] - agg.offsets[3] == 2);
}

TEST_CASE("aggregate weights count the layers carrying each tie") {
    std::vector<NodeId> registry = {0, 1, 2};
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {1, 2}}), layer("b", {{0, 1}})}, registry);
    auto agg = aggregate(net);
    // edge 0-1 in two layers, edge 1-2 in one
    double w01 = 0, w12 = 0;
    for (uint64_t e = agg.offsets[0]; e < agg.offsets[1]; ++e)
        if (agg.neighbors[e] == 1) w01 = agg.weights[e];
    for (uint64_t e = agg.offsets[1]; e < agg.offsets[2]; ++e)
        if (agg.neighbors[e] == 2) w12 = agg.weights[e];
    CHECK(w01 == doctest::Approx(2.0));
    CHECK(w12 == doctest::Approx(1.0));
    CHECK(agg.strength[1] == doctest::Approx(3.0));
}

TEST_CASE("supra-adjacency operator is symmetric and counts degrees") {
    auto net = two_layer_fixture();
    SupraAdjacency A(net, 1.0);
    const std::size_t dim = A.dimension();
    REQUIRE(dim == 8);

    // <Ax, y> == <x, Ay> for random vectors
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(dim), y(dim), ax(dim), ay(dim);
        for (auto& v : x) v = rng.next_double() - 0.5;
        for (auto& v : y) v = rng.next_double() - 0.5;
        A.apply(x, ax);
        A.apply(y, ay);
        double lhs = std::inner_product(ax.begin(), ax.end(), y.begin(), 0.0);
        double rhs = std::inner_product(x.begin(), x.end(), ay.begin(), 0.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }

    // applying to the all-ones vector yields supra strengths
    std::vector<double> ones(dim, 1.0), out(dim);
    A.apply(ones, out);
    auto str = A.strengths();
    for (std::size_t i = 0; i < dim; ++i)
        CHECK(out[i] == doctest::Approx(str[i]));
    // copy (node 0, layer a): degree 2 in layer a + 1 coupling
    CHECK(str[0] == doctest::Approx(3.0));
    // copy (node 1, layer b): degree 0 + 1 coupling
    CHECK(str[4 + 1] == doctest::Approx(1.0));
}

TEST_CASE("coupling weight scales only the inter-layer part") {
    auto net = two_layer_fixture();
    SupraAdjacency a1(net, 1.0), a2(net, 2.0);
    auto s1 = a1.strengths();
    auto s2 = a2.strengths();
    for (std::size_t i = 0; i < s1.size(); ++i) {
        // L = 2, so couplings contribute coupling * 1 per copy
        CHECK(s2[i] - s1[i] == doctest::Approx(1.0));
    }
}

TEST_CASE("transitivity of canonical graphs") {
    std::vector<NodeId> registry(5);
    std::iota(registry.begin(), registry.end(), 0);

    SUBCASE("K5 clique has clustering 1") {
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (NodeId i = 0; i < 5; ++i)
            for (NodeId j = i + 1; j < 5; ++j) edges.push_back({i, j});
        auto net = build_multiplex({layer("c", edges)}, registry);
        auto stats = descriptive_stats(net);
        CHECK(stats[0].clustering == doctest::Approx(1.0));
    }

    SUBCASE("path has clustering 0") {
        auto net = build_multiplex(
            {layer("p", {{0, 1}, {1, 2}, {2, 3}, {3, 4}})}, registry);
        auto stats = descriptive_stats(net);
        CHECK(stats[0].clustering == doctest::Approx(0.0));
    }

    SUBCASE("triangle plus pendant: 3 triangles closed over 5 wedges") {
        // wedges: 0-1-2, 1-2-0, 2-0-1 (closed) + 1-2-3, 0-2-3 (open)
        auto net = build_multiplex(
            {layer("t", {{0, 1}, {1, 2}, {2, 0}, {2, 3}})}, registry);
        auto stats = descriptive_stats(net);
        CHECK(stats[0].clustering == doctest::Approx(3.0 / 5.0));
    }
}

TEST_CASE("descriptive stats cover per-layer and aggregate rows") {
    auto net = two_layer_fixture();
    auto stats = descriptive_stats(net);
    REQUIRE(stats.size() == 3);
    CHECK(stats[0].layer == "a");
    CHECK(stats[1].layer == "b");
    CHECK(stats[2].layer == "aggregate");
    CHECK(stats[0].ties == 4);
    CHECK(stats[0].active_nodes == 4);
    CHECK(stats[1].ties == 1);
    CHECK(stats[1].active_nodes == 2);
    // aggregate union: 0-1, 1-2, 2-0, 2-3, 0-3 -> one component of 4
    CHECK(stats[2].ties == 5);
    CHECK(stats[2].components == 1);
    CHECK(stats[2].giant_share == doctest::Approx(100.0));
    // layer a degrees: 2,2,3,1 -> mean 2, median 2
    CHECK(stats[0].deg_mean == doctest::Approx(2.0));
    CHECK(stats[0].deg_median == doctest::Approx(2.0));
    CHECK(stats[0].deg_sd ==
          doctest::Approx(std::sqrt((0.0 + 0.0 + 1.0 + 1.0) / 3.0)));
}

TEST_CASE("connected components ignore isolated nodes") {
    std::vector<NodeId> registry = {0, 1, 2, 3, 4, 5};
    // two components {0,1} and {3,4,5}; node 2 isolated
    auto net = build_multiplex(
        {layer("g", {{0, 1}, {3, 4}, {4, 5}})}, registry);
    auto& g = net.layers[0];
    auto info = connected_components(g.offsets, g.neighbors);
    CHECK(info.component[2] == -1);
    CHECK(info.component[0] == info.component[1]);
    CHECK(info.component[3] == info.component[4]);
    CHECK(info.component[4] == info.component[5]);
    CHECK(info.component[0] != info.component[3]);
    REQUIRE(info.sizes.size() == 2);
    CHECK(info.giant() == 3);
}

TEST_CASE("empty layer and empty network degenerate cases") {
    std::vector<NodeId> registry = {0, 1};
    auto net = build_multiplex({layer("empty", {})}, registry);
    CHECK(net.layers[0].edge_count == 0);
    CHECK(net.multidegree(0) == 0);
    auto stats = descriptive_stats(net);
    CHECK(stats[0].active_nodes == 0);
    CHECK(std::isnan(stats[0].clustering));
}
