#include <doctest.h>

#include <Eigen/Dense>

#include <numeric>
#include <set>
#include <vector>

#include "mlepi/centrality.hpp"
#include "mlepi/netgen.hpp"
#include "mlepi/rng.hpp"

using namespace mlepi;

namespace {

LayerEdgeList layer(std::string name, std::vector<std::pair<NodeId, NodeId>> edges) {
    return LayerEdgeList{std::move(name), std::move(edges)};
}

// dense supra-adjacency mirror of SupraAdjacency for oracle computations
Eigen::MatrixXd dense_supra(const MultiplexNetwork& net, double coupling) {
    const auto n = static_cast<Eigen::Index>(net.n_nodes());
    const auto l = static_cast<Eigen::Index>(net.n_layers());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n * l, n * l);
    for (Eigen::Index a = 0; a < l; ++a) {
        const auto& g = net.layers[a];
        for (NodeIndex i = 0; i < g.n_nodes(); ++i)
            for (auto j : g.neighbors_of(i))
                A(a * n + i, a * n + j) = 1.0;
        for (Eigen::Index b = 0; b < l; ++b) {
            if (a == b) continue;
            for (Eigen::Index i = 0; i < n; ++i) A(a * n + i, b * n + i) = coupling;
        }
    }
    return A;
}

// dense PageRank oracle: direct linear solve of the stationary equations
std::vector<double> dense_pagerank(const Eigen::MatrixXd& A, double r) {
    const Eigen::Index dim = A.rows();
    Eigen::VectorXd strength = A.rowwise().sum();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim); // column-stochastic transition
    for (Eigen::Index j = 0; j < dim; ++j) {
        if (strength(j) > 0.0)
            for (Eigen::Index i = 0; i < dim; ++i) T(i, j) = A(i, j) / strength(j);
        else
            for (Eigen::Index i = 0; i < dim; ++i) T(i, j) = 1.0 / dim;
    }
    Eigen::MatrixXd G = r * T + (1.0 - r) / dim * Eigen::MatrixXd::Ones(dim, dim);
    // solve (G - I) x = 0 with sum(x) = 1 via replacing the last row
    Eigen::MatrixXd M = G - Eigen::MatrixXd::Identity(dim, dim);
    M.row(dim - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs(dim - 1) = 1.0;
    Eigen::VectorXd x = M.fullPivLu().solve(rhs);
    return {x.data(), x.data() + dim};
}

std::vector<double> contract(const std::vector<double>& supra, std::size_t n,
                             std::size_t l) {
    std::vector<double> out(n, 0.0);
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t i = 0; i < n; ++i) out[i] += supra[a * n + i];
    return out;
}

MultiplexNetwork random_multiplex(Rng& rng, std::size_t n, std::size_t l,
                                  double p) {
    std::vector<NodeId> registry(n);
    std::iota(registry.begin(), registry.end(), 0);
    std::vector<LayerEdgeList> lists;
    for (std::size_t a = 0; a < l; ++a) {
        LayerEdgeList el{"l" + std::to_string(a), {}};
        for (NodeId i = 0; i < n; ++i)
            for (NodeId j = i + 1; j < n; ++j)
                if (rng.next_double() < p) el.edges.push_back({i, j});
        lists.push_back(std::move(el));
    }
    return build_multiplex(lists, registry);
}

} // namespace

TEST_CASE("degree centrality: multidegree excludes couplings") {
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {1, 2}, {2, 0}}), layer("b", {{0, 1}})},
        {0, 1, 2});
    auto multi = degree(net, Structure::multi);
    CHECK(multi.scores == std::vector<double>{3, 3, 2});
    // single-layer degree counts distinct aggregate neighbors... no: it is
    // the aggregate strength, which equals the multidegree
    auto single = degree(net, Structure::single);
    CHECK(single.scores == multi.scores);
}

TEST_CASE("eigenvector centrality on a triangle is uniform with lambda 2") {
    auto net = build_multiplex({layer("a", {{0, 1}, {1, 2}, {2, 0}})}, {0, 1, 2});
    auto ev = eigenvector(net, Structure::multi);
    CHECK(ev.leading_eigenvalue == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(ev.scores[0] == doctest::Approx(ev.scores[1]).epsilon(1e-9));
    CHECK(ev.scores[1] == doctest::Approx(ev.scores[2]).epsilon(1e-9));
    CHECK(ev.residual <= 1e-10);
}

TEST_CASE("eigenvector centrality on a star matches the analytic vector") {
    // K_{1,4}: lambda = sqrt(4) = 2, center weight = 2x each leaf
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {0, 2}, {0, 3}, {0, 4}})}, {0, 1, 2, 3, 4});
    auto ev = eigenvector(net, Structure::multi);
    CHECK(ev.leading_eigenvalue == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(ev.scores[0] / ev.scores[1] == doctest::Approx(2.0).epsilon(1e-8));
    for (int i = 2; i <= 4; ++i)
        CHECK(ev.scores[i] == doctest::Approx(ev.scores[1]).epsilon(1e-9));
}

TEST_CASE("two-layer eigenvector matches a dense Eigen oracle") {
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {1, 2}, {2, 0}}), layer("b", {{0, 1}})},
        {0, 1, 2});
    SolverConfig cfg;
    auto ev = eigenvector(net, Structure::multi, cfg);

    Eigen::MatrixXd A = dense_supra(net, cfg.coupling_weight);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    Eigen::Index top = A.rows() - 1; // ascending eigenvalues
    CHECK(ev.leading_eigenvalue ==
          doctest::Approx(es.eigenvalues()(top)).epsilon(1e-9));

    Eigen::VectorXd v = es.eigenvectors().col(top);
    if (v.sum() < 0) v = -v;
    std::vector<double> oracle = contract({v.data(), v.data() + v.size()},
                                          net.n_nodes(), net.n_layers());
    for (std::size_t i = 0; i < oracle.size(); ++i)
        CHECK(ev.scores[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
}

TEST_CASE("identical layers with coupling 1 shift the spectrum by L-1") {
    // both layers the triangle: supra = A_tri (x) I + (J - I) (x) I_n, so
    // the top eigenvalue is 2 + (L - 1) = 3
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {1, 2}, {2, 0}}), layer("b", {{0, 1}, {1, 2}, {2, 0}})},
        {0, 1, 2});
    auto ev = eigenvector(net, Structure::multi);
    CHECK(ev.leading_eigenvalue == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("single-structure eigenvector uses the weighted aggregate") {
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {1, 2}}), layer("b", {{0, 1}})}, {0, 1, 2});
    auto ev = eigenvector(net, Structure::single);
    // weighted aggregate: w(0,1)=2, w(1,2)=1; leading eigenvalue sqrt(5)
    CHECK(ev.leading_eigenvalue == doctest::Approx(std::sqrt(5.0)).epsilon(1e-9));
    CHECK(ev.scores[0] / ev.scores[2] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("multiplex pagerank matches a dense linear-solve oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        auto net = random_multiplex(rng, 12, 2, 0.25);
        SolverConfig cfg;
        auto pr = pagerank(net, Structure::multi, cfg);

        auto oracle_supra =
            dense_pagerank(dense_supra(net, cfg.coupling_weight), cfg.teleport_rate);
        auto oracle = contract(oracle_supra, net.n_nodes(), net.n_layers());

        double sum = std::accumulate(pr.scores.begin(), pr.scores.end(), 0.0);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t i = 0; i < oracle.size(); ++i)
            CHECK(pr.scores[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
    }
}

TEST_CASE("pagerank on a regular graph is uniform") {
    // 4-cycle: every node identical by symmetry
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {1, 2}, {2, 3}, {3, 0}})}, {0, 1, 2, 3});
    auto pr = pagerank(net, Structure::multi);
    for (auto s : pr.scores) CHECK(s == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("pagerank lower bound: every node gets at least the teleport mass") {
    Rng rng(5);
    auto net = random_multiplex(rng, 20, 2, 0.1);
    auto pr = pagerank(net, Structure::multi);
    const double floor =
        (1.0 - 0.85) / static_cast<double>(net.n_nodes() * net.n_layers()) *
        static_cast<double>(net.n_layers());
    for (auto s : pr.scores) CHECK(s >= floor * (1 - 1e-12));
}

TEST_CASE("pagerank handles isolated nodes via dangling redistribution") {
    // node 2 isolated in both layers; still receives teleport + dangling mass
    auto net = build_multiplex({layer("a", {{0, 1}})}, {0, 1, 2});
    auto pr = pagerank(net, Structure::multi);
    double sum = std::accumulate(pr.scores.begin(), pr.scores.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pr.scores[2] > 0.0);
    auto oracle_supra = dense_pagerank(dense_supra(net, 1.0), 0.85);
    auto oracle = contract(oracle_supra, 3, 1);
    for (int i = 0; i < 3; ++i)
        CHECK(pr.scores[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
}

TEST_CASE("degree is invariant to the coupling weight") {
    auto net = build_multiplex(
        {layer("a", {{0, 1}, {1, 2}}), layer("b", {{2, 0}})}, {0, 1, 2});
    SolverConfig c1, c2;
    c2.coupling_weight = 2.0;
    CHECK(degree(net, Structure::multi).scores ==
          degree(net, Structure::multi).scores);
    // eigenvector does change with the coupling
    auto e1 = eigenvector(net, Structure::multi, c1);
    auto e2 = eigenvector(net, Structure::multi, c2);
    CHECK(e2.leading_eigenvalue > e1.leading_eigenvalue);
}

TEST_CASE("non-convergence raises ConvergenceError with diagnostics") {
    auto net = build_multiplex({layer("a", {{0, 1}, {1, 2}, {2, 0}, {0, 3}})},
                               {0, 1, 2, 3});
    SolverConfig cfg;
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-15;
    try {
        eigenvector(net, Structure::multi, cfg);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations == 1);
        CHECK(e.last_residual > 1e-15);
    }
}

TEST_CASE("all_centralities returns the full six-vector panel") {
    GenParams params;
    params.n_students = 120;
    params.rng_seed = 8;
    auto res = generate(params);
    auto panel = all_centralities(res.net);
    REQUIRE(panel.size() == 6);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& cv : panel) {
        REQUIRE(cv.scores.size() == res.net.n_nodes());
        seen.insert({to_string(cv.measure), to_string(cv.structure)});
    }
    CHECK(seen.size() == 6);
    CHECK(seen.count({"degree", "multi"}) == 1);
    CHECK(seen.count({"pagerank", "single"}) == 1);
}
