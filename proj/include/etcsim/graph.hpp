#pragma once

#include <Eigen/Dense>

#include <vector>

namespace etcsim {

// Weighted digraph on n agents. weights(i, j) = a_ij >= 0 is the weight agent
// v_i assigns to information received from v_j; the link (v_j, v_i) exists iff
// a_ij > 0. The diagonal is zero.
class WeightedDigraph {
public:
    // Validates nonnegativity and zero diagonal; throws InvalidGraphError.
    explicit WeightedDigraph(Eigen::MatrixXd weights);

    // Recovers the adjacency from an in-degree Laplacian: off-diagonals are
    // negated, row sums are checked against zero.
    static WeightedDigraph from_laplacian(const Eigen::MatrixXd& laplacian);

    int size() const { return static_cast<int>(weights_.rows()); }
    const Eigen::MatrixXd& weights() const { return weights_; }

    // True iff v_from sends to v_to, i.e. a_{to,from} > 0.
    bool has_link(int from, int to) const { return weights_(to, from) > 0.0; }

private:
    Eigen::MatrixXd weights_;
};

// In-degree Laplacian L = Deg_in - A. Rows sum to zero; off-diagonals are
// nonpositive and the diagonal carries the in-degrees.
struct Laplacian {
    Eigen::MatrixXd entries;
    Eigen::VectorXd indegrees;

    int size() const { return static_cast<int>(entries.rows()); }
};

Laplacian build_laplacian(const WeightedDigraph& g);

enum class Connectivity { StronglyConnected, SpanningTree, Neither };

const char* to_string(Connectivity c);

// StronglyConnected iff the condensation has a single component; SpanningTree
// iff exactly one component is closed (receives no external links).
Connectivity classify_connectivity(const WeightedDigraph& g);

// One strongly connected component in the permuted (block upper triangular)
// ordering. xi is the positive left null vector of the block's auxiliary
// matrix (the Laplacian of the induced subgraph), normalized to sum 1;
// d holds the per-agent in-weight received from outside the block; q is the
// symmetrized weighted block 1/2 (Xi L^{m,m} + (Xi L^{m,m})^T).
struct SccBlock {
    int offset = 0;
    int size = 0;
    Eigen::VectorXd xi;
    Eigen::VectorXd d;
    Eigen::MatrixXd q;
};

// Result of permuting agents so the Laplacian is block upper triangular with
// the closed component last. permutation[k] is the original index of the
// agent at permuted position k.
struct SccDecomposition {
    std::vector<int> permutation;
    Eigen::MatrixXd permuted_laplacian;
    std::vector<SccBlock> blocks;
    Eigen::MatrixXd u_last;  // Xi^M - xi^M (xi^M)^T for the closed block

    int count() const { return static_cast<int>(blocks.size()); }
    const SccBlock& closed() const { return blocks.back(); }

    // View of L^{m,q} in the permuted matrix, 0-based blocks, q >= m.
    Eigen::Block<const Eigen::MatrixXd> block_matrix(int m, int q) const;

    // xi of the whole graph mapped back to original agent indices; only
    // meaningful for a single strongly connected block (count() == 1).
    Eigen::VectorXd xi_original() const;
};

// Requires a directed spanning tree; throws StructureError naming the closed
// components otherwise. Block order is the reverse topological order of the
// condensation, ties broken by smallest original agent index.
SccDecomposition condense(const WeightedDigraph& g);

// Positive left null vector of an irreducible zero-row-sum matrix (or the
// 1x1 zero matrix), components summing to one. Solved by least squares on the
// transposed system stacked with the normalization row. Throws NumericError
// if the residual exceeds 1e-10 * |block|_inf or a component is nonpositive,
// StructureError if the block is reducible.
Eigen::VectorXd left_null_vector(const Eigen::MatrixXd& block);

// rho_2(Q^M) / rho(U^M) together with the checked Lemma-style certificate
// min eig(Q^M - value * U^M) >= -1e-9.
struct SpectralRatio {
    double value = 0.0;              // +inf when the closed block is a single agent
    bool single_agent = false;
    double rho2_q = 0.0;             // smallest eigenvalue above the structural-zero cutoff
    double rho_u = 0.0;              // spectral radius of U^M
    double certificate_min_eig = 0.0;
};

SpectralRatio spectral_ratio(const SccDecomposition& dec);

}  // namespace etcsim
