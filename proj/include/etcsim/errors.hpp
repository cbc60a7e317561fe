#pragma once

#include <stdexcept>
#include <string>

namespace etcsim {

// Bad adjacency data: negative weights, nonzero diagonal, inconsistent sizes.
struct InvalidGraphError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Graph shape rules out the requested decomposition (e.g. no directed spanning tree).
struct StructureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numeric routine failed to meet its tolerance (root bracketing, quadrature,
// null-space solve).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario-level precondition violations (dimensions, nonpositive trigger gains).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed scenario or graph file.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An agent exceeded the per-agent event budget; message carries the shrinking
// inter-event statistics observed before the guard tripped.
struct ZenoSuspectedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested an analysis that is only defined for decompositions of depth <= 2.
struct UnsupportedDepthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace etcsim
