#pragma once

#include "mmdp/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmdp {

/// Row-stochastic chain of a cluster under the uniform policy (restriction folded).
Mat cluster_chain(const Mdp& mdp, const Cluster& cluster);

/// Mean pairwise embedding distance between two cluster chains, p = min(10, n-1).
double cluster_distance(const Mat& p1, const Mat& p2, double eta = 0.01);

/// 2 d(1,2) - d(1,1) - d(2,2) on size-normalized embeddings; zero for isomorphic chains.
double cluster_match_score(const Mat& p1, const Mat& p2, double eta = 0.01);

struct ClusterPair {
    int c1 = 0;
    int c2 = 0;
    double distance = 0.0;
};

/// Pairs every cluster (with at least 2 states) of h2 at scale j with its lowest-score cluster of h1;
/// near-ties go to the closest cluster id.
std::vector<ClusterPair> match_clusters(const Hierarchy& h1, const Hierarchy& h2, int j, double eta = 0.01);

enum class Correspondence { affinity, identity, ordinal };

Correspondence parse_correspondence(const std::string& s);
std::string correspondence_name(Correspondence c);

/**
State correspondence between two clusters, eta[k] = local index in c1 of local state k of c2, or -1.
affinity: maximum-weight assignment on exp(-ρ/σ²) with σ the median cross distance.
identity: equal labels (equal level ids when unlabelled).
ordinal: interior and boundary ranked separately by "x,y" labels in column-scan order.
*/
std::vector<int> match_states(const Mdp& m1, const Cluster& c1, const Mdp& m2, const Cluster& c2,
                              Correspondence mode, double eta = 0.01);

/// Partial map from states of m2 to states of m1 (-1: unmapped).
struct StateMap {
    std::vector<int> to_source;   ///< size m2.n_states()
    std::vector<int> from_source; ///< size m1.n_states()

    static StateMap from_pair(int n1, int n2, const Cluster& c1, const Cluster& c2, const std::vector<int>& eta);
    static StateMap identity(int n);
};

/// Destination action most likely to reproduce the source move, or nullopt when unmappable.
std::optional<int> map_action(int w, const StochasticPolicy& pi_star, const Mdp& m1, const Mdp& m2,
                              const StateMap& eta);

struct TransferredPolicy {
    StochasticPolicy policy; ///< on all of m2
    std::vector<int> transferred;
    std::vector<int> defaulted;
};

/// Point masses on W_η ∩ int(c2); other interior rows keep `fallback`.
TransferredPolicy transfer_policy(const StochasticPolicy& pi_star, const Mdp& m1, const Mdp& m2, const Cluster& c2,
                                  const StateMap& eta, const StochasticPolicy& fallback);

/**
Values on m2 from the source potential operator applied to pulled-back destination rewards.
Unmapped destination states are NaN; with `partial`, unmapped reward terms count as zero.
*/
Vec transfer_potential(const StochasticPolicy& pi_star, const Mdp& m1, const StochasticPolicy& pi2, const Mdp& m2,
                       const StateMap& eta, bool partial);

/// Fills NaN interior entries of c2 by the boundary value problem with known entries as boundary.
Vec complete_values(const Mdp& m2, const Cluster& c2, const StochasticPolicy& pi, const Vec& partial_values,
                    const ValueFunction& v_boundary);

/// Σ sgn(a-u)·log(|a-u|/(|u| + 1[u=0]) + 1); entries equal to within 1e-12 relative contribute 0.
double transfer_statistic(const Vec& v_transfer, const Vec& v_current);

struct Detection {
    bool accept = false;
    double T = 0.0;
    Vec v_transfer;
    Vec v_current;
};

Detection detect_policy_transfer(const Mdp& m2, const Cluster& c2, const StochasticPolicy& pi_transferred,
                                 const StochasticPolicy& pi_current, const ValueFunction& v, bool conservative);

/// `potential` holds values on c2's interior (NaN where unknown) and is BVP-completed first.
Detection detect_potential_transfer(const Mdp& m2, const Cluster& c2, const Vec& potential,
                                    const StochasticPolicy& pi_current, const ValueFunction& v, bool conservative);

/// Flat policy iteration on every level MDP of a hierarchy.
struct SolvedHierarchy {
    Hierarchy h;
    std::vector<PolicyIterationResult> levels;
};

SolvedHierarchy solve_levels(Hierarchy h);

enum class TransferMode { policy, potential, auto_ };

TransferMode parse_transfer_mode(const std::string& s);
std::string transfer_mode_name(TransferMode m);

struct TransferConfig {
    TransferMode mode = TransferMode::auto_;
    Correspondence correspondence = Correspondence::affinity;
    bool conservative = false;
    double eta = 0.01;
    int max_scale = -1; ///< -1: every shared scale
};

enum class PairMode { none, policy, potential };

std::string pair_mode_name(PairMode m);

struct PairPlan {
    int scale = 0;
    int c1 = 0;
    int c2 = 0;
    double distance = 0.0;
    PairMode tried = PairMode::none;
    PairMode mode = PairMode::none; ///< none when rejected or skipped
    bool skipped = false;
    double T = 0.0;
    std::vector<std::pair<int, int>> policy;     ///< (dest state, action) on W_η
    std::vector<std::pair<int, double>> values;  ///< (dest state at this scale, value)
    std::vector<int> defaulted;
};

struct TransferPlan {
    std::vector<PairPlan> pairs;
    SolveInit init;

    int accepted() const;
};

TransferPlan execute_transfer(const SolvedHierarchy& source, const Hierarchy& dest, const TransferConfig& config);

} // namespace mmdp
