#pragma once

#include "etcsim/errors.hpp"
#include "etcsim/graph.hpp"
#include "etcsim/output_function.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace etcsim {

// A complete simulation setup: coupling graph, output map, initial states
// (one row per agent), per-agent trigger gains and the time horizon.
struct Scenario {
    WeightedDigraph graph;
    OutputFunction output;
    Eigen::MatrixXd x0;      // n x p
    Eigen::VectorXd alpha;   // n, > 0
    Eigen::VectorXd beta;    // n, > 0
    double horizon = 0.0;

    int agent_count() const { return graph.size(); }
    int state_dimension() const { return static_cast<int>(x0.cols()); }

    // Throws ValidationError on dimension mismatches, nonpositive gains or a
    // nonpositive horizon.
    void validate() const {
        const int n = agent_count();
        if (x0.rows() != n) throw ValidationError("x0 must have one row per agent");
        if (x0.cols() < 1) throw ValidationError("state dimension must be positive");
        if (x0.cols() != output.dimension())
            throw ValidationError("output dimension does not match the state dimension");
        if (!x0.allFinite()) throw ValidationError("x0 must be finite");
        if (alpha.size() != n || beta.size() != n)
            throw ValidationError("alpha and beta need one entry per agent");
        for (int i = 0; i < n; ++i) {
            if (!(alpha(i) > 0.0) || !(beta(i) > 0.0)) {
                throw ValidationError("trigger gains alpha_" + std::to_string(i + 1) +
                                      ", beta_" + std::to_string(i + 1) +
                                      " must be positive");
            }
        }
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ValidationError("horizon must be positive and finite");
    }
};

}  // namespace etcsim
