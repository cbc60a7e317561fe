#include "etcsim/simulation.hpp"

#include "etcsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace etcsim {

namespace {

constexpr double kLocateTol = 1e-12;  // absolute event-location tolerance
constexpr double kBatchTol = 1e-10;   // crossings closer than this fire together
constexpr double kInf = std::numeric_limits<double>::infinity();

// First-crossing search for one agent along its current linear flow.
// phi(t) = |e(t)|^2 - threshold(t) is negative between events; the search
// alternates certified root-free skips (driven by a local derivative bound)
// with window probes, so an up-and-down excursion of phi inside a window can
// never be skipped. Crossings are located to kLocateTol and reported at the
// left end of the final bracket, which keeps the trigger at or before the true
// crossing.
class CrossingSearch {
public:
    CrossingSearch(const OutputFunction& f, int p, double t_ref, const double* x_ref,
                   const double* u, const double* xhat, const double* ghat,
                   double alpha, double beta, double floor, double khat)
        : f_(f), p_(p), t_ref_(t_ref), x_ref_(x_ref), u_(u), xhat_(xhat), ghat_(ghat),
          alpha_(alpha), beta_(beta), floor_(floor), khat_(khat) {
        double un2 = 0.0;
        for (int l = 0; l < p_; ++l) un2 += u_[l] * u_[l];
        u_norm_ = std::sqrt(un2);
    }

    double threshold(double t) const {
        return std::max(alpha_ * std::exp(-beta_ * t), floor_);
    }

    double phi(double t) const {
        const double dt = t - t_ref_;
        double e2 = 0.0;
        for (int l = 0; l < p_; ++l) {
            const double e = ghat_[l] - f_.evaluate_component(l, x_ref_[l] + dt * u_[l]);
            e2 += e * e;
        }
        return e2 - threshold(t);
    }

    std::optional<double> first_crossing(double t0, double tmax) const {
        double tc = t0;
        double pc = phi(tc);
        if (pc >= 0.0) return tc;
        if (!(tmax > t0)) return std::nullopt;

        // Window guess: time to reach the threshold at full output speed.
        const double e_now = std::sqrt(std::max(0.0, pc + threshold(tc)));
        double h = (std::sqrt(threshold(tc)) - e_now) / (khat_ * u_norm_ + 1e-300);
        h = std::clamp(h, kLocateTol, tmax - tc);

        for (long iter = 0; iter < 1'000'000; ++iter) {
            h = std::min(h, tmax - tc);
            const double bound = phi_slope_bound(tc, h);
            const double h_safe = -pc / bound;

            if (h_safe >= h) {
                // No crossing strictly inside (tc, tc + h].. check the endpoint.
                tc += h;
                pc = phi(tc);
                if (pc >= 0.0) return tc;
                if (tc >= tmax) return std::nullopt;
                h = std::min(2.0 * h, tmax - tc);
                continue;
            }

            const double probe = phi(tc + h);
            if (probe >= 0.0) {
                if (h <= kLocateTol) return tc > t0 ? tc : tc + h;
                h *= 0.5;
            } else {
                const double step = std::max(h_safe, kLocateTol);
                tc = std::min(tc + step, tmax);
                pc = phi(tc);
                if (pc >= 0.0) return tc;
                if (tc >= tmax) return std::nullopt;
                h = std::max(0.5 * h, 2.0 * step);
            }
        }
        std::ostringstream msg;
        msg << "crossing search exhausted its budget on [" << tc << ", " << tc + h << "]";
        throw NumericError(msg.str());
    }

private:
    // Bound on |phi'| over [t, t + h].
    double phi_slope_bound(double t, double h) const {
        const double dt = t - t_ref_;
        double d2 = 0.0;
        for (int l = 0; l < p_; ++l) {
            const double d = xhat_[l] - (x_ref_[l] + dt * u_[l]);
            d2 += d * d;
        }
        const double e_bound = khat_ * (std::sqrt(d2) + h * u_norm_);
        return 2.0 * khat_ * u_norm_ * e_bound + beta_ * alpha_ * std::exp(-beta_ * t) +
               1e-300;
    }

    const OutputFunction& f_;
    int p_;
    double t_ref_;
    const double *x_ref_, *u_, *xhat_, *ghat_;
    double alpha_, beta_, floor_, khat_;
    double u_norm_;
};

// Engine-internal state is kept p x n so each agent's vectors are contiguous.
struct Engine {
    const Scenario& s;
    const RunOptions& opts;
    Laplacian lap;
    int n, p;

    double t = 0.0;
    Eigen::MatrixXd x, xhat, ghat, u;  // p x n
    std::vector<std::vector<double>> events;
    std::vector<double> cand;  // next crossing per agent; +inf when quiet

    double khat = 1.0;
    double khat_radius = 0.0;

    SimulationRecord record;
    double next_stride_t;

    Engine(const Scenario& scenario, const RunOptions& options)
        : s(scenario), opts(options), lap(build_laplacian(scenario.graph)),
          n(scenario.agent_count()), p(scenario.state_dimension()),
          next_stride_t(options.stride) {
        x = s.x0.transpose();
        xhat = x;
        ghat.resize(p, n);
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < p; ++l) ghat(l, i) = s.output.evaluate_component(l, xhat(l, i));
        u.resize(p, n);
        recompute_control();
        events.assign(static_cast<std::size_t>(n), {0.0});
        cand.assign(static_cast<std::size_t>(n), kInf);

        if (s.output.kind() == OutputKind::Custom) {
            khat_radius = std::max(10.0, 2.0 * x.cwiseAbs().maxCoeff());
            khat = s.output.lipschitz_on(khat_radius);
        }

        record.events = events;
        record.horizon = s.horizon;
        push_sample(0.0);
    }

    void recompute_control() {
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < p; ++l) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += lap.entries(i, j) * ghat(l, j);
                u(l, i) = -acc;
            }
        }
    }

    void maybe_expand_khat() {
        if (s.output.kind() != OutputKind::Custom) return;
        const double reach = x.cwiseAbs().maxCoeff();
        if (reach > 0.8 * khat_radius) {
            khat_radius = 2.0 * std::max(khat_radius, reach);
            khat = s.output.lipschitz_on(khat_radius);
        }
    }

    std::optional<double> search(int i) const {
        CrossingSearch cs(s.output, p, t, x.col(i).data(), u.col(i).data(),
                          xhat.col(i).data(), ghat.col(i).data(), s.alpha(i), s.beta(i),
                          opts.threshold_floor, khat);
        return cs.first_crossing(t, s.horizon);
    }

    void push_sample(double ts) {
        record.samples.push_back({ts, x.transpose(), xhat.transpose()});
    }

    // Moves time forward along the current segment, emitting stride samples
    // strictly before tn. A stride point landing on tn is consumed because the
    // caller emits a sample at tn itself.
    void advance_to(double tn) {
        if (tn <= t) return;
        if (opts.record_segments)
            record.segments.push_back({t, tn, x.transpose(), u.transpose()});
        while (next_stride_t < tn - 1e-12) {
            const double dt = next_stride_t - t;
            record.samples.push_back(
                {next_stride_t, (x + dt * u).transpose(), xhat.transpose()});
            next_stride_t += opts.stride;
        }
        if (std::abs(next_stride_t - tn) <= 1e-12) next_stride_t += opts.stride;
        x += (tn - t) * u;
        t = tn;
        maybe_expand_khat();
    }

    [[noreturn]] void throw_zeno(int agent) const {
        const auto& ev = events[static_cast<std::size_t>(agent)];
        std::ostringstream msg;
        msg << "agent " << agent + 1 << " exceeded " << opts.max_events_per_agent
            << " events at t = " << t << "; recent inter-event gaps:";
        const std::size_t tail = std::min<std::size_t>(8, ev.size() - 1);
        for (std::size_t k = ev.size() - tail; k < ev.size(); ++k)
            msg << " " << ev[k] - ev[k - 1];
        throw ZenoSuspectedError(msg.str());
    }

    SimulationRecord run() {
        for (int i = 0; i < n; ++i) cand[static_cast<std::size_t>(i)] = value_of(search(i));

        while (true) {
            const double tstar = *std::min_element(cand.begin(), cand.end());
            if (!std::isfinite(tstar)) break;

            advance_to(tstar);

            std::vector<int> batch;
            for (int i = 0; i < n; ++i)
                if (cand[static_cast<std::size_t>(i)] <= tstar + kBatchTol) batch.push_back(i);

            for (int i : batch) {
                xhat.col(i) = x.col(i);
                for (int l = 0; l < p; ++l)
                    ghat(l, i) = s.output.evaluate_component(l, xhat(l, i));
                auto& ev = events[static_cast<std::size_t>(i)];
                ev.push_back(tstar);
                if (ev.size() > opts.max_events_per_agent) throw_zeno(i);
            }

            const Eigen::MatrixXd u_old = u;
            recompute_control();
            push_sample(tstar);

            for (int i = 0; i < n; ++i) {
                const bool fired = cand[static_cast<std::size_t>(i)] <= tstar + kBatchTol;
                const bool flow_changed = (u.col(i).array() != u_old.col(i).array()).any();
                if (fired || flow_changed) cand[static_cast<std::size_t>(i)] = value_of(search(i));
            }
        }

        advance_to(s.horizon);
        push_sample(s.horizon);
        record.events = events;
        return std::move(record);
    }

    static double value_of(const std::optional<double>& c) { return c ? *c : kInf; }
};

}  // namespace

Eigen::MatrixXd control_input(const Laplacian& L, const OutputFunction& f,
                              const Eigen::MatrixXd& xhat) {
    const int n = L.size();
    const int p = static_cast<int>(xhat.cols());
    if (xhat.rows() != n) throw ValidationError("control_input: state row count != n");
    Eigen::MatrixXd g(n, p);
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < p; ++l) g(j, l) = f.evaluate_component(l, xhat(j, l));
    Eigen::MatrixXd u(n, p);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < p; ++l) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += L.entries(i, j) * g(j, l);
            u(i, l) = -acc;
        }
    }
    return u;
}

EngineState initial_engine_state(const Scenario& s, const Laplacian& L) {
    s.validate();
    EngineState st;
    st.t = 0.0;
    st.x = s.x0;
    st.xhat = s.x0;
    const int n = s.agent_count();
    const int p = s.state_dimension();
    st.ghat.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < p; ++l) st.ghat(i, l) = s.output.evaluate_component(l, s.x0(i, l));
    st.u = control_input(L, s.output, st.xhat);
    st.event_log.assign(static_cast<std::size_t>(n), {0.0});
    return st;
}

std::optional<double> next_event_time(const EngineState& state, const Scenario& s,
                                      int agent, double t_max, const RunOptions& opts) {
    const int n = s.agent_count();
    const int p = s.state_dimension();
    if (agent < 0 || agent >= n) throw ValidationError("next_event_time: agent out of range");

    const Eigen::VectorXd x_i = state.x.row(agent);
    const Eigen::VectorXd u_i = state.u.row(agent);
    const Eigen::VectorXd xh_i = state.xhat.row(agent);
    const Eigen::VectorXd gh_i = state.ghat.row(agent);

    double khat = 1.0;
    if (s.output.kind() == OutputKind::Custom) {
        const Eigen::VectorXd x_end = x_i + (t_max - state.t) * u_i;
        const double reach = std::max({x_i.cwiseAbs().maxCoeff(), xh_i.cwiseAbs().maxCoeff(),
                                       x_end.cwiseAbs().maxCoeff(), 1.0});
        khat = s.output.lipschitz_on(1.1 * reach);
    }

    CrossingSearch cs(s.output, p, state.t, x_i.data(), u_i.data(), xh_i.data(),
                      gh_i.data(), s.alpha(agent), s.beta(agent), opts.threshold_floor,
                      khat);
    return cs.first_crossing(state.t, t_max);
}

std::size_t SimulationRecord::total_events() const {
    std::size_t total = 0;
    for (const auto& ev : events) total += ev.size();
    return total;
}

SimulationRecord run(const Scenario& s, const RunOptions& opts) {
    s.validate();
    if (classify_connectivity(s.graph) == Connectivity::Neither)
        std::cerr << "etcsim: warning: graph has no directed spanning tree; "
                     "running anyway (no conserved average)\n";
    Engine engine(s, opts);
    return engine.run();
}

std::vector<std::optional<double>> min_inter_event(const SimulationRecord& r) {
    std::vector<std::optional<double>> out;
    out.reserve(r.events.size());
    for (const auto& ev : r.events) {
        if (ev.size() < 2) {
            out.emplace_back(std::nullopt);
            continue;
        }
        double best = kInf;
        for (std::size_t k = 1; k < ev.size(); ++k) best = std::min(best, ev[k] - ev[k - 1]);
        out.emplace_back(best);
    }
    return out;
}

}  // namespace etcsim
