#include "etcsim/graph.hpp"

#include "etcsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace etcsim {

namespace {

double matrix_inf_norm(const Eigen::MatrixXd& m) {
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

// Tarjan over the send orientation (arc j -> i iff a_ij > 0). Emits components
// in reverse topological order of the condensation but callers reorder anyway.
struct TarjanScc {
    const Eigen::MatrixXd& a;
    int n;
    std::vector<int> index, lowlink, stack;
    std::vector<bool> on_stack;
    int next_index = 0;
    std::vector<std::vector<int>> components;

    explicit TarjanScc(const Eigen::MatrixXd& weights)
        : a(weights),
          n(static_cast<int>(weights.rows())),
          index(n, -1),
          lowlink(n, -1),
          on_stack(n, false) {}

    void visit(int v) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
        for (int w = 0; w < n; ++w) {
            if (a(w, v) <= 0.0) continue;  // v sends to w
            if (index[w] == -1) {
                visit(w);
                lowlink[v] = std::min(lowlink[v], lowlink[w]);
            } else if (on_stack[w]) {
                lowlink[v] = std::min(lowlink[v], index[w]);
            }
        }
        if (lowlink[v] == index[v]) {
            std::vector<int> comp;
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
            } while (w != v);
            std::sort(comp.begin(), comp.end());
            components.push_back(std::move(comp));
        }
    }

    std::vector<std::vector<int>> run() {
        for (int v = 0; v < n; ++v)
            if (index[v] == -1) visit(v);
        return std::move(components);
    }
};

std::vector<std::vector<int>> strongly_connected_components(const WeightedDigraph& g) {
    return TarjanScc(g.weights()).run();
}

// A component is closed when its members receive nothing from outside it.
std::vector<bool> closed_flags(const Eigen::MatrixXd& a,
                               const std::vector<std::vector<int>>& comps) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> comp_of(n, -1);
    for (std::size_t c = 0; c < comps.size(); ++c)
        for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
    std::vector<bool> closed(comps.size(), true);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (a(i, j) > 0.0 && comp_of[j] != comp_of[i]) closed[comp_of[i]] = false;
    return closed;
}

bool pattern_strongly_connected(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 0) return false;
    auto reach_all = [&](bool transpose) {
        std::vector<bool> seen(n, false);
        std::vector<int> todo{0};
        seen[0] = true;
        int count = 1;
        while (!todo.empty()) {
            int v = todo.back();
            todo.pop_back();
            for (int w = 0; w < n; ++w) {
                double entry = transpose ? m(w, v) : m(v, w);
                if (v != w && entry != 0.0 && !seen[w]) {
                    seen[w] = true;
                    ++count;
                    todo.push_back(w);
                }
            }
        }
        return count == n;
    };
    return reach_all(false) && reach_all(true);
}

}  // namespace

WeightedDigraph::WeightedDigraph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
    if (weights_.rows() != weights_.cols())
        throw InvalidGraphError("adjacency matrix must be square");
    if (weights_.rows() < 1) throw InvalidGraphError("graph needs at least one agent");
    for (int i = 0; i < weights_.rows(); ++i) {
        for (int j = 0; j < weights_.cols(); ++j) {
            const double w = weights_(i, j);
            if (!std::isfinite(w) || w < 0.0) {
                std::ostringstream msg;
                msg << "weight a_" << i + 1 << "," << j + 1 << " = " << w
                    << " must be finite and nonnegative";
                throw InvalidGraphError(msg.str());
            }
        }
        if (weights_(i, i) != 0.0) {
            std::ostringstream msg;
            msg << "self weight a_" << i + 1 << "," << i + 1 << " must be zero";
            throw InvalidGraphError(msg.str());
        }
    }
}

WeightedDigraph WeightedDigraph::from_laplacian(const Eigen::MatrixXd& laplacian) {
    if (laplacian.rows() != laplacian.cols())
        throw InvalidGraphError("Laplacian must be square");
    const double scale = std::max(1.0, matrix_inf_norm(laplacian));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(laplacian.rows(), laplacian.cols());
    for (int i = 0; i < laplacian.rows(); ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < laplacian.cols(); ++j) {
            row_sum += laplacian(i, j);
            if (i == j) continue;
            if (laplacian(i, j) > 0.0) {
                std::ostringstream msg;
                msg << "Laplacian off-diagonal (" << i + 1 << "," << j + 1
                    << ") is positive";
                throw InvalidGraphError(msg.str());
            }
            a(i, j) = -laplacian(i, j);
        }
        if (std::abs(row_sum) > 1e-9 * scale) {
            std::ostringstream msg;
            msg << "Laplacian row " << i + 1 << " sums to " << row_sum
                << ", expected 0";
            throw InvalidGraphError(msg.str());
        }
    }
    return WeightedDigraph(std::move(a));
}

Laplacian build_laplacian(const WeightedDigraph& g) {
    const Eigen::MatrixXd& a = g.weights();
    Laplacian out;
    out.indegrees = a.rowwise().sum();
    out.entries = -a;
    out.entries.diagonal() = out.indegrees;
    return out;
}

const char* to_string(Connectivity c) {
    switch (c) {
        case Connectivity::StronglyConnected: return "strongly-connected";
        case Connectivity::SpanningTree: return "spanning-tree";
        case Connectivity::Neither: return "neither";
    }
    return "unknown";
}

Connectivity classify_connectivity(const WeightedDigraph& g) {
    const auto comps = strongly_connected_components(g);
    if (comps.size() == 1) return Connectivity::StronglyConnected;
    const auto closed = closed_flags(g.weights(), comps);
    const auto closed_count = std::count(closed.begin(), closed.end(), true);
    return closed_count == 1 ? Connectivity::SpanningTree : Connectivity::Neither;
}

Eigen::Block<const Eigen::MatrixXd> SccDecomposition::block_matrix(int m, int q) const {
    const SccBlock& bm = blocks.at(m);
    const SccBlock& bq = blocks.at(q);
    return permuted_laplacian.block(bm.offset, bq.offset, bm.size, bq.size);
}

Eigen::VectorXd SccDecomposition::xi_original() const {
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(permutation.size());
    for (const SccBlock& b : blocks)
        for (int k = 0; k < b.size; ++k) xi(permutation[b.offset + k]) = b.xi(k);
    return xi;
}

Eigen::VectorXd left_null_vector(const Eigen::MatrixXd& block) {
    const int n = static_cast<int>(block.rows());
    if (n != block.cols()) throw InvalidGraphError("block must be square");
    const double norm = matrix_inf_norm(block);
    if (n == 1) {
        if (std::abs(block(0, 0)) > 1e-12 * std::max(1.0, norm))
            throw InvalidGraphError("1x1 block must be zero");
        return Eigen::VectorXd::Ones(1);
    }
    if (!pattern_strongly_connected(block))
        throw StructureError("block is reducible; left null vector is not unique/positive");

    // [block^T; 1^T] xi = [0; 1]: consistent when the null space is
    // one-dimensional, so least squares recovers the exact null vector.
    Eigen::MatrixXd sys(n + 1, n);
    sys.topRows(n) = block.transpose();
    sys.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd xi = sys.colPivHouseholderQr().solve(rhs);
    xi /= xi.sum();

    const double residual = (xi.transpose() * block).cwiseAbs().maxCoeff();
    if (!(residual <= 1e-10 * norm)) {
        std::ostringstream msg;
        msg << "left null vector residual " << residual << " exceeds tolerance "
            << 1e-10 * norm;
        throw NumericError(msg.str());
    }
    if ((xi.array() <= 0.0).any())
        throw NumericError("left null vector has a nonpositive component");
    return xi;
}

SccDecomposition condense(const WeightedDigraph& g) {
    const Eigen::MatrixXd& a = g.weights();
    const int n = g.size();
    const auto comps = strongly_connected_components(g);
    const auto closed = closed_flags(a, comps);

    if (std::count(closed.begin(), closed.end(), true) != 1) {
        std::ostringstream msg;
        msg << "graph has no directed spanning tree; closed components:";
        for (std::size_t c = 0; c < comps.size(); ++c) {
            if (!closed[c]) continue;
            msg << " {";
            for (std::size_t k = 0; k < comps[c].size(); ++k)
                msg << (k ? "," : "") << "v" << comps[c][k] + 1;
            msg << "}";
        }
        throw StructureError(msg.str());
    }

    const int m_count = static_cast<int>(comps.size());
    std::vector<int> comp_of(n, -1);
    for (int c = 0; c < m_count; ++c)
        for (int v : comps[c]) comp_of[v] = c;

    // sends_to[c] = components receiving from c. Blocks are emitted once all
    // their receivers are placed, smallest original agent first among ties,
    // which puts the closed component last.
    std::vector<std::vector<int>> sends_to(m_count);
    std::vector<int> pending_receivers(m_count, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (a(i, j) > 0.0 && comp_of[i] != comp_of[j])
                sends_to[comp_of[j]].push_back(comp_of[i]);
    for (auto& v : sends_to) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    for (int c = 0; c < m_count; ++c) pending_receivers[c] = static_cast<int>(sends_to[c].size());

    std::vector<std::vector<int>> receives_from(m_count);
    for (int c = 0; c < m_count; ++c)
        for (int r : sends_to[c]) receives_from[r].push_back(c);

    std::vector<int> order;
    std::vector<bool> emitted(m_count, false);
    while (static_cast<int>(order.size()) < m_count) {
        int pick = -1;
        for (int c = 0; c < m_count; ++c) {
            if (emitted[c] || pending_receivers[c] != 0) continue;
            if (pick == -1 || comps[c].front() < comps[pick].front()) pick = c;
        }
        if (pick == -1) throw StructureError("condensation ordering failed (cycle?)");
        emitted[pick] = true;
        order.push_back(pick);
        for (int s : receives_from[pick]) --pending_receivers[s];
    }

    SccDecomposition dec;
    dec.permutation.reserve(n);
    for (int c : order)
        for (int v : comps[c]) dec.permutation.push_back(v);

    const Laplacian lap = build_laplacian(g);
    dec.permuted_laplacian.resize(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            dec.permuted_laplacian(r, c) = lap.entries(dec.permutation[r], dec.permutation[c]);

    int offset = 0;
    for (int c : order) {
        SccBlock block;
        block.offset = offset;
        block.size = static_cast<int>(comps[c].size());
        const auto lmm = dec.permuted_laplacian.block(offset, offset, block.size, block.size);

        // Auxiliary matrix: same off-diagonals, diagonal chosen for zero row
        // sums; the difference against lmm is the external in-weight d.
        Eigen::MatrixXd aux = lmm;
        for (int i = 0; i < block.size; ++i) {
            double off = 0.0;
            for (int j = 0; j < block.size; ++j)
                if (j != i) off += lmm(i, j);
            aux(i, i) = -off;
        }
        block.d = (lmm - aux).diagonal();
        block.xi = left_null_vector(aux);
        const Eigen::MatrixXd xl = block.xi.asDiagonal() * lmm;
        block.q = 0.5 * (xl + xl.transpose());

        offset += block.size;
        dec.blocks.push_back(std::move(block));
    }

    const SccBlock& last = dec.blocks.back();
    dec.u_last = Eigen::MatrixXd(last.xi.asDiagonal());
    dec.u_last -= last.xi * last.xi.transpose();
    return dec;
}

SpectralRatio spectral_ratio(const SccDecomposition& dec) {
    const SccBlock& last = dec.closed();
    SpectralRatio out;
    if (last.size == 1) {
        out.single_agent = true;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qs(last.q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> us(dec.u_last);
    if (qs.info() != Eigen::Success || us.info() != Eigen::Success)
        throw NumericError("symmetric eigensolver failed on the closed block");

    const Eigen::VectorXd qe = qs.eigenvalues();
    const double rho_q = qe.cwiseAbs().maxCoeff();
    // The structural zero eigenvalue is separated by a relative cutoff.
    const double cutoff = 1e-9 * rho_q;
    double rho2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < qe.size(); ++i)
        if (qe(i) > cutoff) rho2 = std::min(rho2, qe(i));
    if (!std::isfinite(rho2))
        throw NumericError("closed block has no eigenvalue above the zero cutoff");

    out.rho2_q = rho2;
    out.rho_u = us.eigenvalues().cwiseAbs().maxCoeff();
    if (out.rho_u == 0.0) {
        out.single_agent = true;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    out.value = out.rho2_q / out.rho_u;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cert(last.q - out.value * dec.u_last);
    out.certificate_min_eig = cert.eigenvalues().minCoeff();
    if (!(out.certificate_min_eig >= -1e-9)) {
        std::ostringstream msg;
        msg << "spectral certificate violated: min eig " << out.certificate_min_eig;
        throw NumericError(msg.str());
    }
    return out;
}

}  // namespace etcsim
