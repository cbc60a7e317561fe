#include "etcsim/analysis.hpp"

#include "etcsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace etcsim {

namespace {

// Original agent index of member k of block m.
int original_agent(const SccDecomposition& dec, const SccBlock& b, int k) {
    return dec.permutation[static_cast<std::size_t>(b.offset + k)];
}

Eigen::VectorXd block_average(const SccDecomposition& dec, const SccBlock& b,
                              const Eigen::MatrixXd& x) {
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(x.cols());
    for (int k = 0; k < b.size; ++k) avg += b.xi(k) * x.row(original_agent(dec, b, k)).transpose();
    return avg;
}

}  // namespace

Eigen::VectorXd weighted_initial_average(const SccDecomposition& dec,
                                         const Eigen::MatrixXd& x0) {
    return block_average(dec, dec.closed(), x0);
}

ConditionReport check_conditions(const SccDecomposition& dec, const OutputFunction& f,
                                 const Eigen::MatrixXd& x0) {
    ConditionReport rep;
    rep.average = weighted_initial_average(dec, x0);
    rep.h = f.h();
    const double max_abs = rep.average.cwiseAbs().maxCoeff();
    rep.sufficient_holds = dec.count() == 1 ? max_abs <= rep.h : max_abs < rep.h;
    rep.necessary_applicable = f.saturation_like();
    rep.necessary_holds = rep.necessary_applicable && max_abs <= rep.h;
    return rep;
}

double block_lyapunov_V(const SccDecomposition& dec, int m, const OutputFunction& f,
                        const Eigen::MatrixXd& x, const Eigen::VectorXd& reference) {
    const SccBlock& b = dec.blocks.at(static_cast<std::size_t>(m));
    double v = 0.0;
    for (int k = 0; k < b.size; ++k) {
        const int agent = original_agent(dec, b, k);
        double inner = 0.0;
        for (int l = 0; l < f.dimension(); ++l)
            inner += f.antiderivative(l, reference(l), x(agent, l));
        v += b.xi(k) * inner;
    }
    return v;
}

double lyapunov_V(const SccDecomposition& dec, const OutputFunction& f,
                  const Eigen::MatrixXd& x, const Eigen::VectorXd& reference) {
    if (dec.count() != 1)
        throw ValidationError("lyapunov_V needs a strongly connected graph; "
                              "use block_lyapunov_V per component");
    return block_lyapunov_V(dec, 0, f, x, reference);
}

double max_step_increase(const std::vector<double>& times,
                         const std::vector<double>& values, double t_from) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        if (times[k] >= t_from) worst = std::max(worst, values[k + 1] - values[k]);
    return worst;
}

LyapunovSeries lyapunov_W(const SccDecomposition& dec, const OutputFunction& f,
                          const SimulationRecord& record, const Scenario& scenario) {
    if (dec.count() > 2)
        throw UnsupportedDepthError("Lyapunov assembly is defined for at most two blocks; "
                                    "decomposition has " + std::to_string(dec.count()));
    if (record.samples.empty()) throw ValidationError("record has no samples");

    const Laplacian lap = build_laplacian(scenario.graph);
    const int n = scenario.agent_count();
    const int p = scenario.state_dimension();
    const std::size_t m_samples = record.samples.size();

    LyapunovSeries out;
    out.times.reserve(m_samples);
    for (const auto& smp : record.samples) out.times.push_back(smp.t);

    const Eigen::VectorXd reference =
        weighted_initial_average(dec, record.samples.front().x);

    auto outputs_at = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd g(n, p);
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < p; ++l) g(i, l) = f.evaluate_component(l, x(i, l));
        return g;
    };

    if (dec.count() == 1) {
        const Eigen::VectorXd xi = dec.xi_original();
        out.V.reserve(m_samples);
        out.W.reserve(m_samples);
        out.q.resize(static_cast<Eigen::Index>(m_samples), n);
        for (std::size_t k = 0; k < m_samples; ++k) {
            const auto& smp = record.samples[k];
            const double v = lyapunov_V(dec, f, smp.x, reference);
            double tail = 0.0;
            for (int i = 0; i < n; ++i)
                tail += 2.0 * xi(i) * lap.indegrees(i) * scenario.alpha(i) /
                        scenario.beta(i) * std::exp(-scenario.beta(i) * smp.t);
            out.V.push_back(v);
            out.W.push_back(v + tail);

            const Eigen::MatrixXd g = outputs_at(smp.x);
            for (int i = 0; i < n; ++i) {
                double qi = 0.0;
                for (int j = 0; j < n; ++j)
                    qi -= 0.5 * lap.entries(i, j) * (g.row(j) - g.row(i)).squaredNorm();
                out.q(static_cast<Eigen::Index>(k), i) = qi;
            }
        }
        return out;
    }

    // Two blocks: assemble the combined candidate and its constants.
    const SccBlock& b1 = dec.blocks[0];
    const SccBlock& b2 = dec.blocks[1];
    const int n1 = b1.size;
    const int n2 = b2.size;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q1s(b1.q);
    if (q1s.info() != Eigen::Success) throw NumericError("eigensolver failed on Q^1");
    // The proof's per-step bound needs the smallest eigenvalue of Q^1 (positive
    // definite on spanning-tree graphs).
    out.rho_q1 = q1s.eigenvalues().minCoeff();
    if (!(out.rho_q1 > 0.0)) throw NumericError("Q^1 is not positive definite");

    const auto l11 = dec.block_matrix(0, 0);
    const auto l12 = dec.block_matrix(0, 1);
    out.d1.resize(n1);
    for (int j = 0; j < n1; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n1; ++i) {
            const double term = b1.xi(i) * l11(i, j);
            acc += term * term;
        }
        out.d1(j) = acc / out.rho_q1;
    }
    out.d2.resize(n2);
    for (int j = 0; j < n2; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n1; ++i) {
            const double term = b1.xi(i) * l12(i, j);
            acc += term * term;
        }
        out.d2(j) = acc / out.rho_q1;
    }

    if (n2 == 1) {
        // Single-agent closed block: its state is constant, V2 never moves and
        // the spectral gain is vacuous.
        out.K_v = 1.0;
    } else {
        const SpectralRatio sr = spectral_ratio(dec);
        const double k_s2 = f.lipschitz_on(f.h());
        const double varrho = f.varrho();
        out.K_v = (2.0 * n2 * k_s2 * k_s2 * out.d2.maxCoeff() / b2.xi.minCoeff() + 1.0) *
                  2.0 * sr.rho_u / (varrho * varrho * sr.rho2_q);
    }

    const auto l22 = dec.block_matrix(1, 1);
    out.V1.reserve(m_samples);
    out.V2.reserve(m_samples);
    out.Wr.reserve(m_samples);
    out.mu.reserve(m_samples);
    for (std::size_t k = 0; k < m_samples; ++k) {
        const auto& smp = record.samples[k];
        const double v1 = block_lyapunov_V(dec, 0, f, smp.x, reference);
        const double v2 = block_lyapunov_V(dec, 1, f, smp.x, reference);

        double tail = 0.0;
        for (int j = 0; j < n1; ++j) {
            const int agent = original_agent(dec, b1, j);
            tail += 3.0 * n1 * out.d1(j) * scenario.alpha(agent) / scenario.beta(agent) *
                    std::exp(-scenario.beta(agent) * smp.t);
        }
        for (int j = 0; j < n2; ++j) {
            const int agent = original_agent(dec, b2, j);
            const double decay = std::exp(-scenario.beta(agent) * smp.t);
            tail += 3.0 * n2 * out.d2(j) * scenario.alpha(agent) / scenario.beta(agent) * decay;
            tail += out.K_v * b2.xi(j) * l22(j, j) * scenario.alpha(agent) /
                    scenario.beta(agent) * decay;
        }

        double mu = 0.0;
        for (int j = 0; j < n2; ++j) {
            const int agent = original_agent(dec, b2, j);
            double dev2 = 0.0;
            for (int l = 0; l < p; ++l) {
                const double d = f.evaluate_component(l, smp.x(agent, l)) - reference(l);
                dev2 += d * d;
            }
            mu += 0.5 * b2.xi(j) * dev2;
        }

        out.V1.push_back(v1);
        out.V2.push_back(v2);
        out.Wr.push_back(v1 + out.K_v * v2 + tail);
        out.mu.push_back(mu);
    }

    // First sample time after which every closed-block state stays strictly
    // inside the band through the end of the record.
    const double h = f.h();
    std::size_t k0 = m_samples;
    for (std::size_t k = m_samples; k-- > 0;) {
        bool inside = true;
        for (int j = 0; j < n2 && inside; ++j) {
            const int agent = original_agent(dec, b2, j);
            for (int l = 0; l < p; ++l) {
                if (!(std::abs(record.samples[k].x(agent, l)) < h)) {
                    inside = false;
                    break;
                }
            }
        }
        if (!inside) break;
        k0 = k;
    }
    if (k0 < m_samples) out.detected_T1 = out.times[k0];
    return out;
}

ConsensusVerdict consensus_verdict(const SccDecomposition& dec, const OutputFunction& f,
                                   const Eigen::MatrixXd& x0,
                                   const SimulationRecord& record, double epsilon) {
    ConsensusVerdict v;
    v.epsilon = epsilon;
    v.consensus_value = weighted_initial_average(dec, x0);
    const ConditionReport cond = check_conditions(dec, f, x0);
    v.sufficient_condition_holds = cond.sufficient_holds;
    v.necessary_applicable = cond.necessary_applicable;
    v.necessary_condition_holds = cond.necessary_holds;

    const Eigen::MatrixXd& xt = record.samples.back().x;
    double spread = 0.0;
    for (int i = 0; i < xt.rows(); ++i)
        for (int l = 0; l < xt.cols(); ++l)
            spread = std::max(spread, std::abs(xt(i, l) - v.consensus_value(l)));
    v.terminal_spread = spread;
    v.achieved = spread <= epsilon;
    return v;
}

double conservation_residual(const SccDecomposition& dec, const SimulationRecord& record) {
    if (record.samples.empty()) return 0.0;
    const Eigen::VectorXd nu0 = block_average(dec, dec.closed(), record.samples.front().x);
    double worst = 0.0;
    for (const auto& smp : record.samples) {
        const Eigen::VectorXd nut = block_average(dec, dec.closed(), smp.x);
        worst = std::max(worst, (nut - nu0).cwiseAbs().maxCoeff());
    }
    return worst;
}

double compliance_margin(const Scenario& s, const SimulationRecord& record) {
    const int n = s.agent_count();
    const int p = s.state_dimension();
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& smp : record.samples) {
        for (int i = 0; i < n; ++i) {
            double e2 = 0.0;
            for (int l = 0; l < p; ++l) {
                const double e = s.output.evaluate_component(l, smp.xhat(i, l)) -
                                 s.output.evaluate_component(l, smp.x(i, l));
                e2 += e * e;
            }
            worst = std::max(worst, e2 - s.alpha(i) * std::exp(-s.beta(i) * smp.t));
        }
    }
    return worst;
}

RunSummary summarize(const SccDecomposition& dec, const Scenario& s,
                     const SimulationRecord& record, double epsilon) {
    RunSummary out;
    out.verdict = consensus_verdict(dec, s.output, s.x0, record, epsilon);
    for (const auto& ev : record.events) {
        out.event_counts.push_back(ev.size());
        out.last_event_times.push_back(ev.empty() ? 0.0 : ev.back());
    }
    out.min_inter_event_times = min_inter_event(record);
    out.conservation_resid = conservation_residual(dec, record);
    out.compliance = compliance_margin(s, record);
    return out;
}

}  // namespace etcsim
