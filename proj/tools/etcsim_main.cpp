#include "etcsim/analysis.hpp"
#include "etcsim/errors.hpp"
#include "etcsim/random_scenario.hpp"
#include "etcsim/scenario_io.hpp"
#include "etcsim/simulation.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace etcsim;

namespace {

struct RunOutcome {
    RunSummary summary;
    std::size_t total_events = 0;
};

RunOutcome run_one(const ScenarioFile& file, const fs::path& out_dir, bool emit_lyapunov) {
    fs::create_directories(out_dir);
    const SimulationRecord record = run(file.scenario, file.options);
    const SccDecomposition dec = condense(file.scenario.graph);
    const RunSummary summary = summarize(dec, file.scenario, record, file.consensus_epsilon);

    write_trajectory_csv((out_dir / "trajectory.csv").string(), record);
    write_events_csv((out_dir / "events.csv").string(), record);
    write_summary_json((out_dir / "summary.json").string(), file, summary);
    if (emit_lyapunov) {
        try {
            const LyapunovSeries series =
                lyapunov_W(dec, file.scenario.output, record, file.scenario);
            write_lyapunov_csv((out_dir / "lyapunov.csv").string(), series);
        } catch (const UnsupportedDepthError& e) {
            std::cerr << "etcsim: skipping lyapunov.csv: " << e.what() << "\n";
        }
    }
    return {summary, record.total_events()};
}

std::vector<double> parse_list(const std::string& csv, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw ValidationError("cannot parse '" + item + "' in " + flag);
        }
    }
    if (out.empty()) throw ValidationError(flag + " needs at least one value");
    return out;
}

int cmd_run(const std::string& scenario_path, std::optional<double> horizon,
            std::optional<double> stride, std::string out_dir, bool emit_lyapunov,
            const std::string& sweep_alpha, const std::string& sweep_beta) {
    ScenarioFile file = load_scenario(scenario_path);
    if (horizon) file.scenario.horizon = *horizon;
    if (stride) file.options.stride = *stride;
    file.scenario.validate();
    if (out_dir.empty()) out_dir = "out/" + file.name;

    if (sweep_alpha.empty() && sweep_beta.empty()) {
        const RunOutcome outcome = run_one(file, out_dir, emit_lyapunov);
        const ConsensusVerdict& v = outcome.summary.verdict;
        std::cout << file.name << ": consensus " << (v.achieved ? "achieved" : "not achieved")
                  << ", value ~ " << v.consensus_value.transpose()
                  << ", terminal spread " << v.terminal_spread << ", " << outcome.total_events
                  << " events, artifacts in " << out_dir << "\n";
        return 0;
    }

    // Gain sweep: every (alpha, beta) combination, runs in parallel, one
    // artifact directory per combination plus a flat table of inter-event
    // statistics.
    const std::vector<double> alphas =
        sweep_alpha.empty() ? std::vector<double>{file.scenario.alpha(0)}
                            : parse_list(sweep_alpha, "--sweep-alpha");
    const std::vector<double> betas =
        sweep_beta.empty() ? std::vector<double>{file.scenario.beta(0)}
                           : parse_list(sweep_beta, "--sweep-beta");

    struct Combo {
        double alpha, beta;
        std::future<RunOutcome> result;
        fs::path dir;
    };
    std::vector<Combo> combos;
    for (double a : alphas) {
        for (double b : betas) {
            ScenarioFile variant = file;
            const int n = variant.scenario.agent_count();
            variant.scenario.alpha = Eigen::VectorXd::Constant(n, a);
            variant.scenario.beta = Eigen::VectorXd::Constant(n, b);
            variant.scenario.validate();
            std::ostringstream sub;
            sub << "alpha" << a << "_beta" << b;
            fs::path dir = fs::path(out_dir) / sub.str();
            combos.push_back({a, b,
                              std::async(std::launch::async,
                                         [variant, dir, emit_lyapunov] {
                                             return run_one(variant, dir, emit_lyapunov);
                                         }),
                              dir});
        }
    }

    fs::create_directories(out_dir);
    std::ofstream table(fs::path(out_dir) / "sweep.csv");
    table << "alpha,beta,agent,event_count,min_inter_event,mean_inter_event\n";
    for (auto& combo : combos) {
        const RunOutcome outcome = combo.result.get();
        for (std::size_t i = 0; i < outcome.summary.event_counts.size(); ++i) {
            table << combo.alpha << "," << combo.beta << "," << i + 1 << ","
                  << outcome.summary.event_counts[i] << ",";
            if (outcome.summary.min_inter_event_times[i])
                table << *outcome.summary.min_inter_event_times[i];
            table << ",";
            const std::size_t count = outcome.summary.event_counts[i];
            if (count >= 2)
                table << outcome.summary.last_event_times[i] / static_cast<double>(count - 1);
            table << "\n";
        }
        std::cout << "sweep alpha=" << combo.alpha << " beta=" << combo.beta << ": "
                  << (outcome.summary.verdict.achieved ? "consensus" : "no consensus")
                  << ", artifacts in " << combo.dir.string() << "\n";
    }
    std::cout << "sweep table: " << (fs::path(out_dir) / "sweep.csv").string() << "\n";
    return 0;
}

int cmd_generate(int n, int p, std::uint64_t seed, const std::string& connectivity,
                 const std::string& out_file) {
    Connectivity target;
    if (connectivity == "strong")
        target = Connectivity::StronglyConnected;
    else if (connectivity == "spanning-tree")
        target = Connectivity::SpanningTree;
    else
        throw ValidationError("--connectivity must be 'strong' or 'spanning-tree'");

    const ScenarioFile file = generate_random(n, p, seed, target);
    save_scenario(out_file, file);
    std::cout << "wrote " << out_file << " (" << file.name << ", "
              << to_string(classify_connectivity(file.scenario.graph)) << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-triggered consensus simulator for directed multi-agent networks"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario file and write artifacts");
    std::string scenario_path, out_dir, sweep_alpha, sweep_beta;
    std::optional<double> horizon, stride;
    bool emit_lyapunov = false;
    run_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--horizon", horizon, "Override the simulation horizon");
    run_cmd->add_option("--stride", stride, "Override the dense-output spacing");
    run_cmd->add_option("--out", out_dir, "Artifact directory (default out/<name>)");
    run_cmd->add_flag("--emit-lyapunov", emit_lyapunov, "Also write lyapunov.csv");
    run_cmd->add_option("--sweep-alpha", sweep_alpha, "Comma list of alpha gains to sweep");
    run_cmd->add_option("--sweep-beta", sweep_beta, "Comma list of beta gains to sweep");

    auto* gen_cmd = app.add_subcommand("generate", "Generate a random scenario file");
    int n = 0, p = 1;
    std::uint64_t seed = 0;
    std::string connectivity = "strong", gen_out;
    gen_cmd->add_option("--n", n, "Agent count")->required();
    gen_cmd->add_option("--p", p, "State dimension");
    gen_cmd->add_option("--seed", seed, "Generator seed")->required();
    gen_cmd->add_option("--connectivity", connectivity, "strong | spanning-tree");
    gen_cmd->add_option("--out", gen_out, "Output scenario path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return cmd_run(scenario_path, horizon, stride, out_dir, emit_lyapunov,
                           sweep_alpha, sweep_beta);
        if (gen_cmd->parsed())
            return cmd_generate(n, p, seed, connectivity, gen_out);
    } catch (const std::exception& e) {
        std::cerr << "etcsim: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
