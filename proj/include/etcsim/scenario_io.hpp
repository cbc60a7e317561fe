#pragma once

#include "etcsim/analysis.hpp"
#include "etcsim/scenario.hpp"
#include "etcsim/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace etcsim {

// A scenario plus the run policy that travels with it in a file.
struct ScenarioFile {
    std::string name;
    Scenario scenario;
    RunOptions options;
    double consensus_epsilon = 5e-2;
};

// JSON with // comments allowed. Graphs come either as {"n", "edges": [[from,
// to, weight], ...]} with 1-based agents (a_{to,from} = weight) or as a full
// {"laplacian": [[...], ...]}. Outputs are tagged "identity" or
// {"kind": "saturation", "h": ...}.
ScenarioFile parse_scenario(const nlohmann::json& j);
ScenarioFile load_scenario(const std::string& path);

nlohmann::json to_json(const ScenarioFile& f);
void save_scenario(const std::string& path, const ScenarioFile& f);

// FNV-1a over the canonical serialized form; stable across runs and builds.
std::uint64_t scenario_hash(const ScenarioFile& f);

void write_trajectory_csv(const std::string& path, const SimulationRecord& record);
void write_events_csv(const std::string& path, const SimulationRecord& record);
void write_lyapunov_csv(const std::string& path, const LyapunovSeries& series);
void write_summary_json(const std::string& path, const ScenarioFile& f,
                        const RunSummary& summary);

}  // namespace etcsim
