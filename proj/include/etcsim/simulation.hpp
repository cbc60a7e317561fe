#pragma once

#include "etcsim/graph.hpp"
#include "etcsim/scenario.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace etcsim {

struct RunOptions {
    double stride = 1e-2;          // dense output spacing
    // Absolute floor on the squared-error threshold. The exponential threshold
    // alpha_i e^{-beta_i t} eventually drops below what double precision can
    // represent in a state difference; crossings below the floor are noise.
    // Keep it at or below any compliance slack used downstream.
    double threshold_floor = 1e-8;
    std::size_t max_events_per_agent = 1'000'000;
    bool record_segments = true;
};

// Mutable engine snapshot. u is the control held constant between events;
// xhat/ghat are the last-broadcast states and their outputs.
struct EngineState {
    double t = 0.0;
    Eigen::MatrixXd x;      // n x p
    Eigen::MatrixXd xhat;   // n x p
    Eigen::MatrixXd ghat;   // n x p
    Eigen::MatrixXd u;      // n x p
    std::vector<std::vector<double>> event_log;
};

// u_i = -sum_j L_ij g(xhat_j). Summation is a plain sequential loop so results
// are reproducible bit for bit across builds.
Eigen::MatrixXd control_input(const Laplacian& L, const OutputFunction& f,
                              const Eigen::MatrixXd& xhat);

// State right after the mandatory trigger of every agent at t = 0.
EngineState initial_engine_state(const Scenario& s, const Laplacian& L);

// Smallest t in (state.t, t_max] where |e_i(t)|^2 meets the (floored)
// threshold, assuming every agent flows linearly along its current u. Located
// to an absolute tolerance of 1e-12; nullopt when the condition holds through
// t_max. Throws NumericError if the safeguarded search exhausts its budget.
std::optional<double> next_event_time(const EngineState& state, const Scenario& s,
                                      int agent, double t_max,
                                      const RunOptions& opts = {});

struct SimulationRecord {
    // One piece of the piecewise-linear flow: x(t) = x_begin + (t - t_begin) u.
    struct Segment {
        double t_begin = 0.0;
        double t_end = 0.0;
        Eigen::MatrixXd x_begin;
        Eigen::MatrixXd u;
    };
    // Dense output row; xhat is kept so error/threshold compliance can be
    // checked offline.
    struct Sample {
        double t = 0.0;
        Eigen::MatrixXd x;
        Eigen::MatrixXd xhat;
    };

    std::vector<Segment> segments;
    std::vector<std::vector<double>> events;  // per-agent trigger times, starting at 0
    std::vector<Sample> samples;              // stride grid plus event times, sorted
    double horizon = 0.0;

    std::size_t total_events() const;
};

// Event-driven simulation: exact linear flow between events, safeguarded
// root-finding for the trigger crossings, simultaneous crossings batched
// within 1e-10. Throws ZenoSuspectedError when an agent exceeds the event
// budget. Graphs without a spanning tree are allowed (the protocol is still
// well defined); callers that need a conserved average should check
// connectivity themselves.
SimulationRecord run(const Scenario& s, const RunOptions& opts = {});

// Per-agent minimum inter-event gap; nullopt for agents with fewer than two
// events.
std::vector<std::optional<double>> min_inter_event(const SimulationRecord& r);

}  // namespace etcsim
