#include "etcsim/random_scenario.hpp"

#include "etcsim/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

namespace etcsim {

namespace {

// Cycle through `members` plus a few extra internal links; strong connectivity
// of the group by construction.
void add_strong_group(Eigen::MatrixXd& a, const std::vector<int>& members,
                      std::mt19937_64& rng) {
    std::uniform_real_distribution<double> weight(0.5, 2.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const std::size_t m = members.size();
    if (m == 1) return;
    std::vector<int> order = members;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < m; ++k) {
        const int from = order[k];
        const int to = order[(k + 1) % m];
        a(to, from) = weight(rng);  // from sends to to
    }
    for (int from : members)
        for (int to : members)
            if (from != to && a(to, from) == 0.0 && coin(rng) < 0.25)
                a(to, from) = weight(rng);
}

}  // namespace

ScenarioFile generate_random(int n, int p, std::uint64_t seed, Connectivity target) {
    if (n < 2) throw ValidationError("random scenarios need at least 2 agents");
    if (p < 1) throw ValidationError("state dimension must be positive");
    if (target == Connectivity::Neither)
        throw ValidationError("target connectivity must be strong or spanning-tree");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> weight(0.5, 2.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> state(-5.0, 5.0);

    for (int attempt = 0; attempt < 32; ++attempt) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        std::vector<int> agents(static_cast<std::size_t>(n));
        std::iota(agents.begin(), agents.end(), 0);

        if (target == Connectivity::StronglyConnected) {
            add_strong_group(a, agents, rng);
        } else {
            // Two or more strongly connected groups; only the last one is
            // closed. Cross links always point from a later group to an
            // earlier one, so the condensation stays acyclic.
            std::shuffle(agents.begin(), agents.end(), rng);
            const int max_groups = std::min(3, n - 1);
            std::uniform_int_distribution<int> group_count(2, std::max(2, max_groups));
            const int k = group_count(rng);
            std::vector<std::vector<int>> groups(static_cast<std::size_t>(k));
            for (int i = 0; i < n; ++i) {
                // Spread leftovers so every group is nonempty.
                const int g = i < k ? i : std::uniform_int_distribution<int>(0, k - 1)(rng);
                groups[static_cast<std::size_t>(g)].push_back(agents[static_cast<std::size_t>(i)]);
            }
            for (const auto& grp : groups) add_strong_group(a, grp, rng);
            for (int m = 0; m + 1 < k; ++m) {
                const int q = std::uniform_int_distribution<int>(m + 1, k - 1)(rng);
                const auto& src = groups[static_cast<std::size_t>(q)];
                const auto& dst = groups[static_cast<std::size_t>(m)];
                const int from = src[std::uniform_int_distribution<std::size_t>(
                    0, src.size() - 1)(rng)];
                const int to = dst[std::uniform_int_distribution<std::size_t>(
                    0, dst.size() - 1)(rng)];
                a(to, from) = weight(rng);
            }
            for (int q = 1; q < k; ++q) {
                for (int m = 0; m < q; ++m) {
                    for (int from : groups[static_cast<std::size_t>(q)])
                        for (int to : groups[static_cast<std::size_t>(m)])
                            if (a(to, from) == 0.0 && coin(rng) < 0.15)
                                a(to, from) = weight(rng);
                }
            }
        }

        WeightedDigraph graph(std::move(a));
        if (classify_connectivity(graph) != target) continue;

        Eigen::MatrixXd x0(n, p);
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < p; ++l) x0(i, l) = state(rng);

        ScenarioFile f{
            "",
            Scenario{std::move(graph),
                     seed % 2 == 0 ? OutputFunction::saturation(p, 1.0)
                                   : OutputFunction::identity(p),
                     std::move(x0), Eigen::VectorXd::Constant(n, 1.0),
                     Eigen::VectorXd::Constant(n, 1.0), 20.0},
            RunOptions{},
            5e-2};
        std::ostringstream name;
        name << "random_" << (target == Connectivity::StronglyConnected ? "strong" : "tree")
             << "_n" << n << "_p" << p << "_s" << seed;
        f.name = name.str();
        f.scenario.validate();
        return f;
    }
    throw StructureError("random scenario generation exhausted its retry budget");
}

}  // namespace etcsim
