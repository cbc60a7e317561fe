#pragma once

#include "etcsim/graph.hpp"
#include "etcsim/output_function.hpp"
#include "etcsim/scenario.hpp"
#include "etcsim/simulation.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace etcsim {

// xi-weighted average of the initial states: over all agents for a strongly
// connected graph, over the closed component otherwise. This is the conserved
// quantity and the consensus value when the initial-condition tests pass.
Eigen::VectorXd weighted_initial_average(const SccDecomposition& dec,
                                         const Eigen::MatrixXd& x0);

struct ConditionReport {
    Eigen::VectorXd average;          // xbar(0) or nu(0)
    double h = 0.0;
    bool sufficient_holds = false;    // |avg_l| <= h (single block), < h (multiple)
    bool necessary_applicable = false;  // only for saturation-like outputs
    bool necessary_holds = false;       // |avg_l| <= h
};

ConditionReport check_conditions(const SccDecomposition& dec, const OutputFunction& f,
                                 const Eigen::MatrixXd& x0);

// V = sum_i xi_i sum_l G_l with G_l the output antiderivative anchored at the
// reference; zero exactly when every agent's output equals the reference
// output. Requires a single strongly connected block.
double lyapunov_V(const SccDecomposition& dec, const OutputFunction& f,
                  const Eigen::MatrixXd& x, const Eigen::VectorXd& reference);

// Same candidate restricted to block m (0-based), with block-local xi weights.
double block_lyapunov_V(const SccDecomposition& dec, int m, const OutputFunction& f,
                        const Eigen::MatrixXd& x, const Eigen::VectorXd& reference);

// Sampled Lyapunov diagnostics along a finished run. For a single block: V, W
// and the per-agent dissipation rates q_i. For two blocks: V1, V2, the
// combined candidate Wr with its constants, and mu. Depth > 2 is unsupported.
struct LyapunovSeries {
    std::vector<double> times;

    std::vector<double> V, W;          // single-block case
    Eigen::MatrixXd q;                 // samples x n, single-block case

    std::vector<double> V1, V2, Wr;    // two-block case
    std::vector<double> mu;

    double K_v = 0.0;
    double rho_q1 = 0.0;               // smallest eigenvalue of Q^1
    Eigen::VectorXd d1, d2;
    std::optional<double> detected_T1; // first sample time after which every
                                       // closed-block state stays inside (-h, h)
};

LyapunovSeries lyapunov_W(const SccDecomposition& dec, const OutputFunction& f,
                          const SimulationRecord& record, const Scenario& scenario);

// Largest single-step increase of a sampled series restricted to t >= t_from;
// <= 0 means nonincreasing.
double max_step_increase(const std::vector<double>& times,
                         const std::vector<double>& values, double t_from);

struct ConsensusVerdict {
    bool achieved = false;
    Eigen::VectorXd consensus_value;
    double terminal_spread = 0.0;      // max_i,l |x_il(T) - value_l|
    bool sufficient_condition_holds = false;
    bool necessary_applicable = false;
    bool necessary_condition_holds = false;
    double epsilon = 0.0;
};

ConsensusVerdict consensus_verdict(const SccDecomposition& dec, const OutputFunction& f,
                                   const Eigen::MatrixXd& x0,
                                   const SimulationRecord& record,
                                   double epsilon = 5e-2);

// max over samples and components of |nu_l(t) - nu_l(0)|, the drift of the
// conserved weighted average.
double conservation_residual(const SccDecomposition& dec, const SimulationRecord& record);

// max over samples and agents of |e_i(t)|^2 - alpha_i e^{-beta_i t}; stays at
// or below the engine's threshold floor on a compliant run.
double compliance_margin(const Scenario& s, const SimulationRecord& record);

struct RunSummary {
    ConsensusVerdict verdict;
    std::vector<std::size_t> event_counts;
    std::vector<std::optional<double>> min_inter_event_times;
    std::vector<double> last_event_times;  // the agent is quiet from here to the horizon
    double conservation_resid = 0.0;
    double compliance = 0.0;
};

RunSummary summarize(const SccDecomposition& dec, const Scenario& s,
                     const SimulationRecord& record, double epsilon = 5e-2);

}  // namespace etcsim
