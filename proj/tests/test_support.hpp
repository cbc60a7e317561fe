#pragma once

#include "etcsim/graph.hpp"
#include "etcsim/scenario.hpp"

#include <Eigen/Dense>

#include <vector>

namespace etcsim::test {

// Seven-agent benchmark network: agents 1-4 and 5-7 form the two strongly
// connected components, 5-7 closed.
inline Eigen::MatrixXd bench7_laplacian() {
    Eigen::MatrixXd L(7, 7);
    L << 7.8, 0.0, -5.2, -2.6, 0.0, 0.0, 0.0,
        -3.9, 3.9, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, -4.1, 13.3, -3.4, 0.0, -5.8, 0.0,
        0.0, 0.0, -6.7, 12.5, -1.5, -4.3, 0.0,
        0.0, 0.0, 0.0, 0.0, 7.6, -2.2, -5.4,
        0.0, 0.0, 0.0, 0.0, -5.1, 6.2, -1.1,
        0.0, 0.0, 0.0, 0.0, 0.0, -8.7, 8.7;
    return L;
}

inline WeightedDigraph bench7_graph() {
    return WeightedDigraph::from_laplacian(bench7_laplacian());
}

inline Eigen::MatrixXd bench7_x0_consensus() {
    Eigen::MatrixXd x0(7, 1);
    x0 << 9, 1, -6, 5, 8, -7, 6;
    return x0;
}

inline Eigen::MatrixXd bench7_x0_blocked() {
    Eigen::MatrixXd x0(7, 1);
    x0 << 9, 1, -6, 5, 8, 0, 6;
    return x0;
}

// Exact left null vector of the closed block {v5, v6, v7}, solved by hand
// elimination on the 3x3 system: xi proportional to [4437, 6612, 3590]/14639.
inline Eigen::Vector3d bench7_closed_xi() {
    return Eigen::Vector3d(4437.0 / 14639.0, 6612.0 / 14639.0, 3590.0 / 14639.0);
}

// a_{to,from} = weight for each (from, to, weight) triple, 0-based agents.
inline WeightedDigraph make_graph(int n, const std::vector<std::array<double, 3>>& edges) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : edges)
        a(static_cast<int>(e[1]), static_cast<int>(e[0])) = e[2];
    return WeightedDigraph(std::move(a));
}

inline WeightedDigraph two_cycle(double w12 = 1.0, double w21 = 1.0) {
    // v1 <-> v2: a_12 = w12 (1 receives from 2), a_21 = w21.
    Eigen::MatrixXd a(2, 2);
    a << 0.0, w12, w21, 0.0;
    return WeightedDigraph(std::move(a));
}

inline WeightedDigraph uniform_cycle(int n, double w = 1.0) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a((i + 1) % n, i) = w;  // i sends to i+1
    return WeightedDigraph(std::move(a));
}

inline Scenario basic_scenario(WeightedDigraph g, OutputFunction f, Eigen::MatrixXd x0,
                               double gain_alpha, double gain_beta, double horizon) {
    const int n = g.size();
    return Scenario{std::move(g), std::move(f), std::move(x0),
                    Eigen::VectorXd::Constant(n, gain_alpha),
                    Eigen::VectorXd::Constant(n, gain_beta), horizon};
}

}  // namespace etcsim::test
