#pragma once

#include "mmdp/mdp.hpp"
#include "mmdp/partition.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace mmdp {

/// A cluster restricted out of a larger Mdp. Local state k is states[k];
/// the first n_interior local states are the interior.
struct ClusterModel {
    Mdp mdp;
    std::vector<int> states;
    int n_interior = 0;

    int size() const { return static_cast<int>(states.size()); }
    std::vector<int> boundary_local() const;
};

ClusterModel localize(const Mdp& mdp, const Cluster& cluster);

/// |c| x |∂c| hitting distribution of the boundary; boundary given in local ids.
/// Rows of boundary states hold P̃ (first positive-time hit).
Mat hitting_probabilities(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary);

/// Column `target` of hitting_probabilities, with h = δ on the boundary itself.
Vec harmonic_h(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary, int target);

struct KernelEntry {
    int s, a, next;
    double w;
};

/// Doob h-transform kernels conditioned on exiting at `target`.
struct ConditionedKernels {
    std::vector<KernelEntry> interior; ///< P_h on interior states with h > 1e-14
    std::vector<KernelEntry> boundary; ///< P_h~ on boundary states with P̃(s,·,target) > 0
};

/// p_tilde_col(k) = P̃(boundary[k], ·, target).
ConditionedKernels conditioned_kernels(const Mdp& cluster_mdp, const StochasticPolicy& pi,
                                       const std::vector<int>& boundary, const Vec& h, int target,
                                       const Vec& p_tilde_col);

/// |∂c| x |∂c| blocks for one coarse action. Entries off supp(P̃) hold r = 0, g = 1, len = 0.
struct CoarseBlock {
    Mat p;
    Mat r;
    Mat g;
    Mat len;
};

Mat compress_rewards(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary);
Mat compress_discounts(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary);
Mat expected_path_lengths(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary);
CoarseBlock compress_cluster(const Mdp& cluster_mdp, const StochasticPolicy& pi, const std::vector<int>& boundary);

struct PoolPolicy {
    StochasticPolicy pi; ///< local to the cluster
    int bottleneck = -1; ///< provenance: the target bottleneck (level state id), -1 if none
    double reward = std::numeric_limits<double>::quiet_NaN();
};

using ClusterPool = std::vector<PoolPolicy>;
using PolicyPool = std::vector<ClusterPool>; ///< one entry per cluster

struct PoolConfig {
    int n_r_samples = 9;
    double bisection_tol = 1e-3; ///< relative to |Rint|
    double lambda = 0.01;        ///< regularization weight
};

/// Reward-bonus pool: one policy per boundary target. `boundary` holds local ids; provenance ids are local too.
ClusterPool policy_pool_for_cluster(const Mdp& cluster_mdp, const std::vector<int>& boundary,
                                    const PoolConfig& config = {});

/// Longest finite BFS distance in the support graph of a cluster.
int support_diameter(const Mdp& cluster_mdp);

/// One uniform policy per cluster.
PolicyPool diffusion_pool(const Mdp& mdp, const Partition& partition);
PolicyPool algorithm3_pool(const Mdp& mdp, const Partition& partition, const PoolConfig& config = {});

struct CoarseAction {
    int cluster = 0;
    int policy = 0;
    bool operator==(const CoarseAction&) const = default;
};

struct CoarseMdp {
    Mdp mdp;                          ///< states are the partition's bottlenecks, in order
    std::vector<int> states;          ///< coarse id -> fine id
    std::vector<CoarseAction> actions;
    std::vector<double> path_lengths; ///< aligned with mdp.transitions()
};

/// Coarse MDP on the bottleneck set; one coarse action per (cluster, pool policy).
CoarseMdp compress_mdp(const Mdp& mdp, const Partition& partition, const PolicyPool& pools);

/// Monte-Carlo estimates for one cluster action, |∂c| x |∂c| like CoarseBlock.
struct ClusterEstimate {
    int cluster = 0;
    std::vector<int> boundary; ///< fine ids
    CoarseBlock mean;
    CoarseBlock stderr_;
    Mat counts;
    std::int64_t censored = 0;
};

struct MonteCarloOptions {
    std::int64_t n_traj = 100000;
    std::uint64_t seed = 1;
    std::int64_t step_cap = 1000000;
};

/// Simulates P_c^π from each boundary state until the first positive-time boundary hit.
std::vector<ClusterEstimate> monte_carlo_compress(const Mdp& mdp, const Partition& partition,
                                                  const StochasticPolicy& pi, const MonteCarloOptions& options);

} // namespace mmdp
