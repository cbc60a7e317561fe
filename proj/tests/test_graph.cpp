#include "etcsim/graph.hpp"

#include "etcsim/errors.hpp"
#include "etcsim/random_scenario.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace etcsim;
using namespace etcsim::test;

TEST_CASE("laplacian of an edgeless graph is zero") {
    WeightedDigraph g(Eigen::MatrixXd::Zero(3, 3));
    const Laplacian L = build_laplacian(g);
    CHECK(L.entries.isZero(0.0));
    CHECK(L.indegrees.isZero(0.0));
}

TEST_CASE("laplacian of a single link follows the in-degree convention") {
    // Agent 1 receives from agent 2 with weight 2.
    WeightedDigraph g = make_graph(2, {{1, 0, 2.0}});
    const Laplacian L = build_laplacian(g);
    CHECK(L.entries(0, 0) == 2.0);
    CHECK(L.entries(0, 1) == -2.0);
    CHECK(L.entries(1, 0) == 0.0);
    CHECK(L.entries(1, 1) == 0.0);
}

TEST_CASE("benchmark adjacency reproduces its Laplacian exactly") {
    const Eigen::MatrixXd expected = bench7_laplacian();
    WeightedDigraph g = WeightedDigraph::from_laplacian(expected);
    const Laplacian L = build_laplacian(g);
    CHECK((L.entries - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid adjacency data is rejected") {
    Eigen::MatrixXd negative = Eigen::MatrixXd::Zero(2, 2);
    negative(0, 1) = -1.0;
    CHECK_THROWS_AS(WeightedDigraph{negative}, InvalidGraphError);

    Eigen::MatrixXd selfloop = Eigen::MatrixXd::Zero(2, 2);
    selfloop(1, 1) = 0.5;
    CHECK_THROWS_AS(WeightedDigraph{selfloop}, InvalidGraphError);

    Eigen::MatrixXd bad_rows(2, 2);
    bad_rows << 1.0, -0.5, -1.0, 1.0;  // row 1 sums to 0.5
    CHECK_THROWS_AS(WeightedDigraph::from_laplacian(bad_rows), InvalidGraphError);
}

TEST_CASE("row sums of generated Laplacians vanish") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto file = generate_random(3 + static_cast<int>(seed % 8), 1, seed,
                                          seed % 2 ? Connectivity::StronglyConnected
                                                   : Connectivity::SpanningTree);
        const Laplacian L = build_laplacian(file.scenario.graph);
        CHECK(L.entries.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("connectivity classification") {
    CHECK(classify_connectivity(two_cycle()) == Connectivity::StronglyConnected);
    // Chain v2 -> v1 has a spanning tree rooted at v2.
    CHECK(classify_connectivity(make_graph(2, {{1, 0, 1.0}})) == Connectivity::SpanningTree);
    CHECK(classify_connectivity(bench7_graph()) == Connectivity::SpanningTree);
    // Two isolated agents: two closed components.
    CHECK(classify_connectivity(WeightedDigraph(Eigen::MatrixXd::Zero(2, 2))) ==
          Connectivity::Neither);
}

TEST_CASE("condense keeps a strongly connected graph in one block") {
    const SccDecomposition dec = condense(uniform_cycle(3));
    CHECK(dec.count() == 1);
    CHECK(dec.blocks[0].size == 3);
    CHECK(dec.blocks[0].d.isZero(0.0));
}

TEST_CASE("condense orders the benchmark graph with the closed block last") {
    const SccDecomposition dec = condense(bench7_graph());
    REQUIRE(dec.count() == 2);
    CHECK(dec.blocks[0].size == 4);
    CHECK(dec.blocks[1].size == 3);
    for (int k = 0; k < 4; ++k) CHECK(dec.permutation[k] == k);
    for (int k = 4; k < 7; ++k) CHECK(dec.permutation[k] == k);

    // Structural zeros below the diagonal blocks, exactly.
    CHECK(dec.permuted_laplacian.block(4, 0, 3, 4).isZero(0.0));
    // The open block depends on the closed one.
    CHECK(dec.block_matrix(0, 1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("condense on a two-agent chain") {
    // v2 -> v1: closed component {v2} comes last, coupling block is -a_12.
    const SccDecomposition dec = condense(make_graph(2, {{1, 0, 1.5}}));
    REQUIRE(dec.count() == 2);
    CHECK(dec.blocks[0].size == 1);
    CHECK(dec.blocks[1].size == 1);
    CHECK(dec.permutation[0] == 0);
    CHECK(dec.permutation[1] == 1);
    CHECK(dec.block_matrix(0, 1)(0, 0) == -1.5);
    CHECK(dec.blocks[1].xi(0) == 1.0);
    CHECK(dec.blocks[0].d(0) == 1.5);
}

TEST_CASE("condense rejects graphs without a spanning tree") {
    // Two 2-cycles with no links between them: both closed.
    WeightedDigraph g = make_graph(4, {{0, 1, 1}, {1, 0, 1}, {2, 3, 1}, {3, 2, 1}});
    CHECK_THROWS_WITH_AS(condense(g), doctest::Contains("closed components"),
                         StructureError);
}

TEST_CASE("left null vector of symmetric structures") {
    Eigen::MatrixXd L2(2, 2);
    L2 << 1, -1, -1, 1;
    const Eigen::VectorXd xi2 = left_null_vector(L2);
    CHECK(xi2(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(xi2(1) == doctest::Approx(0.5).epsilon(1e-14));

    const Laplacian L3 = build_laplacian(uniform_cycle(3));
    const Eigen::VectorXd xi3 = left_null_vector(L3.entries);
    for (int i = 0; i < 3; ++i) CHECK(xi3(i) == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("left null vector of the benchmark closed block") {
    const SccDecomposition dec = condense(bench7_graph());
    const Eigen::VectorXd xi = dec.closed().xi;
    const Eigen::Vector3d expected = bench7_closed_xi();
    CHECK((xi - expected).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::Vector3d tail(8.0, -7.0, 6.0);
    CHECK(xi.dot(tail) == doctest::Approx(0.7345).epsilon(7e-4));
}

TEST_CASE("left null vector is invariant under positive scaling") {
    const Laplacian L = build_laplacian(bench7_graph());
    const Eigen::MatrixXd block = L.entries.block(4, 4, 3, 3);
    const Eigen::VectorXd base = left_null_vector(block);
    for (double c : {1e-4, 0.3, 7.0, 1e5}) {
        const Eigen::VectorXd scaled = left_null_vector(c * block);
        CHECK((scaled - base).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("left null vector rejects reducible blocks") {
    Eigen::MatrixXd reducible(2, 2);
    reducible << 1, -1, 0, 0;  // chain, not irreducible
    CHECK_THROWS_AS(left_null_vector(reducible), StructureError);
}

TEST_CASE("spectral ratio flags a single-agent closed block") {
    const SccDecomposition dec = condense(make_graph(2, {{1, 0, 1.0}}));
    const SpectralRatio sr = spectral_ratio(dec);
    CHECK(sr.single_agent);
    CHECK(std::isinf(sr.value));
}

TEST_CASE("spectral ratio on the symmetric 2-cycle matches the hand computation") {
    // Q = L/2 has eigenvalues {0, 1}; U = I/2 - 11^T/4 has eigenvalues {0, 1/2}.
    const SccDecomposition dec = condense(two_cycle());
    const SpectralRatio sr = spectral_ratio(dec);
    CHECK(sr.rho2_q == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sr.rho_u == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sr.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sr.certificate_min_eig >= -1e-12);
    CHECK(sr.certificate_min_eig <= 1e-12);  // Q - 2U vanishes here
}

TEST_CASE("spectral ratio certificate holds on the benchmark closed block") {
    const SccDecomposition dec = condense(bench7_graph());
    const SpectralRatio sr = spectral_ratio(dec);
    CHECK(sr.certificate_min_eig >= -1e-9);
    // Frozen dense-eigensolve oracle values.
    CHECK(sr.rho2_q == doctest::Approx(3.018556176319432).epsilon(1e-9));
    CHECK(sr.rho_u == doctest::Approx(0.37642459191474803).epsilon(1e-9));
}

TEST_CASE("random strongly connected graphs satisfy the null-vector contract") {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        const auto file =
            generate_random(3 + static_cast<int>(seed % 10), 1, seed,
                            Connectivity::StronglyConnected);
        const Laplacian L = build_laplacian(file.scenario.graph);
        const Eigen::VectorXd xi = left_null_vector(L.entries);
        CHECK((xi.array() > 0.0).all());
        CHECK(std::abs(xi.sum() - 1.0) <= 1e-12);
        CHECK((xi.transpose() * L.entries).cwiseAbs().maxCoeff() <= 1e-10);

        // Symmetrized weighted Laplacian: zero row sums, one zero eigenvalue.
        const Eigen::MatrixXd sym =
            xi.asDiagonal() * L.entries + L.entries.transpose() * xi.asDiagonal();
        CHECK(sym.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        int zeros = 0;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            if (std::abs(es.eigenvalues()(i)) <= 1e-8) ++zeros;
        CHECK(zeros == 1);
    }
}

TEST_CASE("open blocks of random spanning-tree graphs are positive definite") {
    int with_multiple_blocks = 0;
    for (std::uint64_t seed = 200; seed < 240; ++seed) {
        const auto file = generate_random(4 + static_cast<int>(seed % 9), 1, seed,
                                          Connectivity::SpanningTree);
        const SccDecomposition dec = condense(file.scenario.graph);
        REQUIRE(dec.count() >= 2);
        ++with_multiple_blocks;
        for (int m = 0; m + 1 < dec.count(); ++m) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dec.blocks[m].q);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
        }
        const SpectralRatio sr = spectral_ratio(dec);
        if (!sr.single_agent) CHECK(sr.certificate_min_eig >= -1e-9);
    }
    CHECK(with_multiple_blocks == 40);
}
