#pragma once

#include "mmdp/compress.hpp"
#include "mmdp/mdp.hpp"
#include "mmdp/partition.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

namespace fixtures {

using namespace mmdp;

/// 0 -> 1 w.p. 1; 1 -> {0, 2} w.p. 1/2 each; 2 absorbing. One action.
inline Mdp chain3(double gamma = 0.9, double reward = 1.0) {
    std::vector<Transition> t = {
        {0, 0, 1, 1.0, reward, gamma},
        {1, 0, 0, 0.5, reward, gamma},
        {1, 0, 2, 0.5, reward, gamma},
        {2, 0, 2, 1.0, 0.0, gamma},
    };
    return Mdp(3, 1, t, {{0}, {0}, {0}}, {false, false, true});
}

/// 0 -> 1 w.p. 1; 1 self-loops w.p. 1/2, exits to 2 w.p. 1/2; 2 absorbing.
inline Mdp chain4(double gamma = 0.9, double reward = 1.0) {
    std::vector<Transition> t = {
        {0, 0, 1, 1.0, reward, gamma},
        {1, 0, 1, 0.5, reward, gamma},
        {1, 0, 2, 0.5, reward, gamma},
        {2, 0, 2, 1.0, 0.0, gamma},
    };
    return Mdp(3, 1, t, {{0}, {0}, {0}}, {false, false, true});
}

/// Single-action uniform random walk on an undirected graph.
inline Mdp walk(int n, const std::vector<std::pair<int, int>>& edges, double gamma = 0.9) {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<Transition> t;
    for (int s = 0; s < n; ++s)
        for (int u : adj[s]) t.push_back({s, 0, u, 1.0 / adj[s].size(), 0.0, gamma});
    return Mdp(n, 1, t, std::vector<std::vector<int>>(n, {0}), std::vector<bool>(n, false));
}

/// Two triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
inline Mdp two_clique_bridge() {
    return walk(6, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}, {2, 3}});
}

inline Mdp path(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
    return walk(n, e);
}

/// Dense random MDP: every action feasible, `branching` successors per (s, a).
inline Mdp random_mdp(int n, int na, std::mt19937_64& rng, int branching = 3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<Transition> t;
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < na; ++a) {
            std::set<int> succ;
            while (static_cast<int>(succ.size()) < std::min(branching, n)) succ.insert(pick(rng));
            std::vector<double> w;
            for (std::size_t k = 0; k < succ.size(); ++k) w.push_back(0.1 + u(rng));
            double total = 0.0;
            for (double x : w) total += x;
            int k = 0;
            for (int s2 : succ) t.push_back({s, a, s2, w[k++] / total, 2.0 * u(rng) - 1.0, 0.5 + 0.45 * u(rng)});
        }
    std::vector<std::vector<int>> feas(n);
    for (auto& f : feas)
        for (int a = 0; a < na; ++a) f.push_back(a);
    return Mdp(n, na, t, feas, std::vector<bool>(n, false));
}

inline StochasticPolicy random_policy(const Mdp& mdp, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Mat p = Mat::Zero(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a : mdp.feasible(s)) p(s, a) = u(rng);
        p.row(s) /= p.row(s).sum();
    }
    return StochasticPolicy(p);
}

/**
Random MDP with planted cluster structure. Non-bottleneck states are split into
`groups`; each lives on a cycle inside its group and may also step to random
bottlenecks. Each bottleneck has a home group and only steps into it, so its
whole one-step distribution stays inside one cluster.
*/
struct PlantedMdp {
    Mdp mdp;
    std::vector<int> bottlenecks;
    std::vector<int> home; ///< per bottleneck index, its group
    std::vector<int> group_of;
};

inline PlantedMdp planted_mdp(int n, int na, int n_bottlenecks, int groups, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    PlantedMdp out;
    out.bottlenecks.assign(ids.begin(), ids.begin() + n_bottlenecks);
    std::sort(out.bottlenecks.begin(), out.bottlenecks.end());
    out.group_of.assign(n, -1);
    std::vector<std::vector<int>> members(groups);
    for (int k = n_bottlenecks; k < n; ++k) {
        int g = (k - n_bottlenecks) % groups;
        out.group_of[ids[k]] = g;
        members[g].push_back(ids[k]);
    }
    for (std::size_t b = 0; b < out.bottlenecks.size(); ++b) out.home.push_back(static_cast<int>(b % groups));

    std::vector<Transition> t;
    auto emit = [&](int s, int a, std::set<int> succ) {
        std::vector<double> w;
        double total = 0.0;
        for (std::size_t k = 0; k < succ.size(); ++k) {
            w.push_back(0.1 + u(rng));
            total += w.back();
        }
        int k = 0;
        for (int s2 : succ) t.push_back({s, a, s2, w[k++] / total, 2.0 * u(rng) - 1.0, 0.5 + 0.45 * u(rng)});
    };
    for (int g = 0; g < groups; ++g) {
        const auto& m = members[g];
        std::uniform_int_distribution<int> in_group(0, static_cast<int>(m.size()) - 1);
        std::uniform_int_distribution<int> any_b(0, n_bottlenecks - 1);
        for (std::size_t i = 0; i < m.size(); ++i)
            for (int a = 0; a < na; ++a) {
                std::set<int> succ = {m[(i + 1) % m.size()], m[in_group(rng)]};
                if (u(rng) < 0.5) succ.insert(out.bottlenecks[any_b(rng)]);
                emit(m[i], a, succ);
            }
    }
    for (std::size_t b = 0; b < out.bottlenecks.size(); ++b) {
        const auto& m = members[out.home[b]];
        std::uniform_int_distribution<int> in_group(0, static_cast<int>(m.size()) - 1);
        for (int a = 0; a < na; ++a) emit(out.bottlenecks[b], a, {m[in_group(rng)], m[in_group(rng)]});
    }
    std::vector<std::vector<int>> feas(n);
    for (auto& f : feas)
        for (int a = 0; a < na; ++a) f.push_back(a);
    out.mdp = Mdp(n, na, t, feas, std::vector<bool>(n, false));
    return out;
}

/// One pool entry per cluster: the restriction of pi.
inline PolicyPool pools_from_policy(const Partition& part, const StochasticPolicy& pi) {
    PolicyPool pools;
    for (const auto& c : part.clusters) pools.push_back({PoolPolicy{restrict_policy(pi, c.states())}});
    return pools;
}

/// Exhaustive conductance minimum over all proper subsets (n <= 20).
inline double min_conductance_bruteforce(const Mat& p) {
    const int n = static_cast<int>(p.rows());
    double best = 1e300;
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<bool> z(n);
        for (int i = 0; i < n; ++i) z[i] = (mask >> i) & 1u;
        best = std::min(best, conductance(p, z));
    }
    return best;
}

} // namespace fixtures
