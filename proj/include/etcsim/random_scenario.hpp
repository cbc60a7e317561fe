#pragma once

#include "etcsim/graph.hpp"
#include "etcsim/scenario_io.hpp"

#include <cstdint>

namespace etcsim {

// Deterministic scenario generator for property suites. Strong targets emit a
// random Hamiltonian cycle plus extra links; spanning-tree targets emit two or
// more strongly connected groups chained so exactly one is closed. The
// generated graph is certified with classify_connectivity before emission;
// throws StructureError if the retry budget is exhausted.
ScenarioFile generate_random(int n, int p, std::uint64_t seed, Connectivity target);

}  // namespace etcsim
